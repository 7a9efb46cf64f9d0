#pragma once

// Downtime measurement: fixed-interval health samples against a Service
// and streak analysis with the gap-merge rule. A failure window's length
// is sample-count * interval; success gaps shorter than the threshold
// merge adjacent windows into one (span measured end to end).

#include <string>
#include <vector>

#include "shadowsim/cluster.hpp"
#include "shadowsim/sim.hpp"

namespace shadowsim {

struct ProbeTrace {
    Duration interval{10000};  // 10 ms
    std::vector<std::pair<SimTime, bool>> samples;  // (time, up)
};

struct DowntimeWindow {
    double start_s = 0.0;
    double end_s = 0.0;
    double span_s() const { return end_s - start_s; }
};

struct DowntimeReport {
    double longest_streak_s = 0.0;
    int streak_count = 0;
    std::vector<DowntimeWindow> windows;  // disjoint, ordered
};

DowntimeReport compute_downtime(const ProbeTrace& trace,
                                double gap_threshold_s = 3.0);

// Samples service endpoint non-emptiness on the simulation clock.
class Prober {
  public:
    Prober(Simulation& sim, const Cluster& cluster, std::string service,
           Duration interval)
        : sim_(sim), cluster_(cluster), service_(std::move(service)) {
        trace_.interval = interval;
    }

    void start();
    void stop();
    bool sample_now() const;  // pure query, no trace append
    const ProbeTrace& trace() const { return trace_; }

  private:
    void tick();

    Simulation& sim_;
    const Cluster& cluster_;
    std::string service_;
    ProbeTrace trace_;
    std::optional<EventId> pending_;
    SimTime origin_{};
    std::uint64_t tick_count_ = 0;
    bool running_ = false;
};

}  // namespace shadowsim
