#pragma once

// Deterministic discrete-event core: fixed-point virtual clock, ordered
// event queue with insertion-order tie-breaking, and seeded duration
// sampling. One Simulation instance per run; instances share nothing.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace shadowsim {

// Virtual time in integer microseconds. Reports render seconds; the clock
// itself never touches floating point, so long runs cannot drift.
struct SimTime {
    std::int64_t us = 0;

    static SimTime from_seconds(double s) {
        return SimTime{static_cast<std::int64_t>(std::llround(s * 1e6))};
    }
    double seconds() const { return static_cast<double>(us) / 1e6; }

    auto operator<=>(const SimTime&) const = default;
    SimTime operator+(SimTime rhs) const { return SimTime{us + rhs.us}; }
    SimTime operator-(SimTime rhs) const { return SimTime{us - rhs.us}; }
    SimTime& operator+=(SimTime rhs) { us += rhs.us; return *this; }
};

using Duration = SimTime;

inline Duration seconds(double s) { return SimTime::from_seconds(s); }

struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Timed-operation latency model. Constant-at-median keeps acceptance
// comparisons exact; uniform jitter exists for spread exploration.
struct DurationModel {
    enum class Kind { Constant, UniformJitter };
    Kind kind = Kind::Constant;
    double median_s = 0.0;
    double jitter_fraction = 0.0;  // in [0, 1)

    static DurationModel constant(double median_s) {
        return DurationModel{Kind::Constant, median_s, 0.0};
    }
    static DurationModel jittered(double median_s, double fraction) {
        return DurationModel{Kind::UniformJitter, median_s, fraction};
    }
};

// Named random stream derived from (seed, stream name); identical streams
// in two runs with the same seed produce identical draws.
class RngStream {
  public:
    RngStream() = default;
    RngStream(std::uint64_t seed, const std::string& name);

    double uniform();  // in [0, 1)

  private:
    std::mt19937_64 gen_{0};
};

using EventId = std::uint64_t;

class Simulation {
  public:
    explicit Simulation(std::uint64_t seed = 1);

    SimTime now() const { return now_; }
    std::uint64_t seed() const { return seed_; }

    // Scheduling in the past is a contract violation and aborts the run.
    EventId schedule_at(SimTime at, std::function<void()> fn);
    EventId schedule_in(Duration delay, std::function<void()> fn);
    // Returns false if the event already fired or was cancelled.
    bool cancel(EventId id);

    // Processes every event with time <= deadline, then advances the clock
    // to the deadline. Returns the final clock value.
    SimTime run_until(SimTime deadline);
    // Runs until the queue is empty or the horizon is hit. Returns the
    // clock at the last dispatched event (or the horizon).
    SimTime run_until_idle(SimTime horizon);

    bool has_pending() const { return live_events_ != 0; }

    Duration sample(const DurationModel& model, const std::string& stream);

    // Invoked after every dispatched event; the audit module hangs off this.
    std::function<void()> post_dispatch;

  private:
    struct Entry {
        SimTime at;
        std::uint64_t seq;
        EventId id;
        bool operator>(const Entry& rhs) const {
            if (at != rhs.at) return rhs.at < at;
            return seq > rhs.seq;
        }
    };

    void dispatch_next();

    SimTime now_{0};
    std::uint64_t seed_;
    std::uint64_t next_seq_ = 0;
    EventId next_id_ = 1;
    std::size_t live_events_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue_;
    std::unordered_map<EventId, std::function<void()>> handlers_;
    std::unordered_map<std::string, RngStream> streams_;
};

}  // namespace shadowsim
