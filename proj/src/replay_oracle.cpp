#include "shadowsim/replay_oracle.hpp"

namespace shadowsim {

double predict_replay(const ReplayModel& model) {
    if (model.lambda <= 0.0) return 0.0;
    if (model.mu > model.lambda) {
        double drain = model.initial_backlog() / (model.mu - model.lambda);
        if (drain <= model.t_cutoff_s) return drain;
    }
    return model.t_cutoff_s;
}

double fit_mu(const std::vector<ReplayObservation>& observations) {
    double sum = 0.0;
    int used = 0;
    for (const auto& obs : observations) {
        if (!obs.drain_completed || obs.measured_replay_s <= 0.0 ||
            obs.lambda <= 0.0)
            continue;
        sum += obs.lambda +
               obs.lambda * obs.t_accum_s / obs.measured_replay_s;
        ++used;
    }
    return used == 0 ? 0.0 : sum / used;
}

}  // namespace shadowsim
