#include "shadowsim/probe.hpp"

#include <algorithm>

namespace shadowsim {

DowntimeReport compute_downtime(const ProbeTrace& trace,
                                double gap_threshold_s) {
    DowntimeReport report;
    const double dt = trace.interval.seconds();

    // Maximal consecutive-failure runs; a run of k samples spans k*dt.
    std::vector<DowntimeWindow> runs;
    std::size_t i = 0;
    while (i < trace.samples.size()) {
        if (trace.samples[i].second) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < trace.samples.size() && !trace.samples[j].second) ++j;
        double start = trace.samples[i].first.seconds();
        double count = static_cast<double>(j - i);
        runs.push_back(DowntimeWindow{start, start + count * dt});
        i = j;
    }

    for (const auto& run : runs) {
        if (!report.windows.empty() &&
            run.start_s - report.windows.back().end_s < gap_threshold_s) {
            report.windows.back().end_s = run.end_s;
        } else {
            report.windows.push_back(run);
        }
    }
    report.streak_count = static_cast<int>(report.windows.size());
    for (const auto& w : report.windows)
        report.longest_streak_s = std::max(report.longest_streak_s, w.span_s());
    return report;
}

void Prober::start() {
    if (running_) return;
    running_ = true;
    origin_ = sim_.now();
    tick_count_ = 0;
    tick();
}

void Prober::stop() {
    running_ = false;
    if (pending_) {
        sim_.cancel(*pending_);
        pending_.reset();
    }
}

bool Prober::sample_now() const {
    return !cluster_.service_endpoints(service_).empty();
}

void Prober::tick() {
    if (!running_) return;
    trace_.samples.emplace_back(sim_.now(), sample_now());
    ++tick_count_;
    SimTime next =
        origin_ + Duration{static_cast<std::int64_t>(tick_count_) *
                           trace_.interval.us};
    pending_ = sim_.schedule_at(next, [this] {
        pending_.reset();
        tick();
    });
}

}  // namespace shadowsim
