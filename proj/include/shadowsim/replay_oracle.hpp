#pragma once

// Closed-form fluid model of replay-queue dynamics. Production is
// constant-rate, so L(t) = L0 + (lambda - mu) * t is exact up to
// discretization; the drain prediction cross-checks the simulator.

#include <vector>

namespace shadowsim {

struct ReplayModel {
    double lambda = 0.0;    // inflow, msg/s
    double mu = 0.0;        // service capacity, msg/s
    double t_accum_s = 0.0; // window during which the queue fills unconsumed
    double t_cutoff_s = 0.0;

    double initial_backlog() const { return lambda * t_accum_s; }
};

// L0/(mu - lambda) when mu > lambda and that value fits the cutoff;
// otherwise the cutoff.
double predict_replay(const ReplayModel& model);

struct ReplayObservation {
    double lambda = 0.0;
    double t_accum_s = 0.0;
    double measured_replay_s = 0.0;
    bool drain_completed = true;  // false when the run hit the cutoff
};

// Per-point mu = lambda + lambda*T_accum/measured, averaged over usable
// observations. Cutoff-bound points carry no rate information and are
// excluded. Returns 0 when no observation is usable.
double fit_mu(const std::vector<ReplayObservation>& observations);

}  // namespace shadowsim
