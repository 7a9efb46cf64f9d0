#pragma once

// Rate-driven producer and the stateful consumer. Consumer state is a
// pure function of the set of applied Data sequence numbers; duplicates
// are dropped by seq-set dedup, and side effects are suppressed while the
// consumer is in Replay mode.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "shadowsim/broker.hpp"
#include "shadowsim/cluster.hpp"
#include "shadowsim/sim.hpp"

namespace shadowsim {

class Producer {
  public:
    Producer(Simulation& sim, Broker& broker, std::string exchange,
             int rate_per_s);

    void start();
    void stop();
    bool running() const { return running_; }
    std::uint64_t published() const { return next_seq_ - 1; }
    int rate() const { return rate_; }

  private:
    void schedule_next();

    Simulation& sim_;
    Broker& broker_;
    std::string exchange_;
    int rate_;
    std::uint64_t next_seq_ = 1;  // gapless, starts at 1
    std::uint64_t tick_ = 0;
    SimTime origin_{};
    std::optional<EventId> pending_;
    bool running_ = false;
};

enum class ConsumerMode { Normal, Replay };

struct ConsumerState {
    std::uint64_t processed_count = 0;
    std::uint64_t last_seq = 0;  // highest Data seq applied
    std::set<std::uint64_t> applied;
    std::uint64_t side_effects_emitted = 0;
    ConsumerMode mode = ConsumerMode::Normal;
};

struct ConsumerConfig {
    int mu_per_s = 84;          // service capacity, messages/second
    Duration idle_poll{10000};  // 10 ms
};

// Event-loop-confined message processor bound to at most one queue.
class Consumer {
  public:
    Consumer(Simulation& sim, Broker& broker, std::string pod_name,
             ConsumerConfig cfg);

    // Registers on the queue (retrying while another consumer holds it)
    // and begins the consume loop after `initial_delay`.
    void attach(const std::string& queue, Duration initial_delay);
    void detach();

    void pause();
    void resume();
    bool paused() const { return paused_; }

    // Out-of-band control message (operator-directed). StartReplay flips
    // to Replay mode and re-targets consumption; EndReplay flips back to
    // Normal and, when a target is given, switches queues.
    void deliver_control(Message::Kind kind,
                         std::optional<std::string> switch_to,
                         Duration initial_delay = Duration{});

    // Queue the consumer moves to once it drains an in-band EndReplay.
    void set_switch_target(const std::string& queue) { switch_target_ = queue; }

    const ConsumerState& state() const { return state_; }
    void load_state(const ConsumerState& s) { state_ = s; }
    const std::string& pod_name() const { return pod_; }
    std::optional<std::string> current_queue() const { return queue_; }
    bool consuming() const { return queue_.has_value() && !paused_; }

    // Applies one message to local state; exposed for direct-drive tests.
    void process_message(const Message& msg);

    // Audit taps: (consumer, seq, duplicate, effect_emitted, mode).
    std::function<void(const std::string&, std::uint64_t, bool, bool,
                       ConsumerMode)>
        on_apply;

  private:
    void try_attach(const std::string& queue, Duration first_step_delay);
    void schedule_step(Duration delay);
    void step();
    void do_switch(const std::string& to);
    Duration service_time() const;

    Simulation& sim_;
    Broker& broker_;
    std::string pod_;
    ConsumerConfig cfg_;
    ConsumerState state_;
    std::optional<std::string> queue_;
    std::optional<std::string> switch_target_;
    std::optional<EventId> pending_;
    bool paused_ = false;
};

// pod -> consumer instance; wiring between cluster lifecycle and consumers.
class WorkloadRegistry {
  public:
    Consumer& create(Simulation& sim, Broker& broker,
                     const std::string& pod_name, ConsumerConfig cfg);
    Consumer* find(const std::string& pod_name);
    const Consumer* find(const std::string& pod_name) const;
    // Terminating pods stop consuming immediately; state stays inspectable.
    void detach_for(const std::string& pod_name);
    const std::map<std::string, std::unique_ptr<Consumer>>& all() const {
        return consumers_;
    }

  private:
    std::map<std::string, std::unique_ptr<Consumer>> consumers_;
};

// Up iff the pod is ready and a consumer instance exists for it.
bool health_check(const Cluster& cluster, const WorkloadRegistry& reg,
                  const std::string& pod_name);

}  // namespace shadowsim
