#pragma once

// Messaging fabric model: fanout exchanges, FIFO queues with single
// registered consumers, bind/unbind, publish, drain and purge. Binding
// changes take effect for strictly-later publishes; the reconciler
// serializes fence steps at distinct timestamps so the fence window has
// nonzero width.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadowsim/sim.hpp"

namespace shadowsim {

struct BrokerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownExchange : BrokerError {
    explicit UnknownExchange(const std::string& n)
        : BrokerError("unknown exchange: " + n) {}
};
struct UnknownQueue : BrokerError {
    explicit UnknownQueue(const std::string& n)
        : BrokerError("unknown queue: " + n) {}
};
struct WrongConsumer : BrokerError {
    explicit WrongConsumer(const std::string& q)
        : BrokerError("queue " + q + " is registered to another consumer") {}
};

struct Message {
    enum class Kind { Data, StartReplay, EndReplay };
    std::uint64_t seq = 0;  // 0 for control messages, never audited
    SimTime publish_time{};
    Kind kind = Kind::Data;

    bool is_data() const { return kind == Kind::Data; }
};

struct QueueRecord {
    std::string name;
    std::deque<Message> messages;
    std::set<std::string> bound_to;
    std::optional<std::string> consumer;  // pod name
};

struct ExchangeRecord {
    std::string name;
    std::set<std::string> bindings;  // queue names; fanout copies to all
};

class Broker {
  public:
    void declare_exchange(const std::string& name);
    void declare_queue(const std::string& name);
    bool has_queue(const std::string& name) const;
    bool has_exchange(const std::string& name) const;
    void delete_queue(const std::string& name);

    // Copies msg into every currently bound queue; returns the copy count.
    int publish(const std::string& exchange, const Message& msg);

    void bind(const std::string& exchange, const std::string& queue);
    // Unbinding a non-existent binding is a no-op.
    void unbind(const std::string& exchange, const std::string& queue);
    bool is_bound(const std::string& exchange, const std::string& queue) const;

    // One consumer per queue. Registering an occupied queue fails.
    bool try_register_consumer(const std::string& queue,
                               const std::string& pod);
    void release_consumer(const std::string& queue, const std::string& pod);

    std::optional<Message> consume_next(const std::string& queue,
                                        const std::string& pod);

    // Order-preserving move of all messages from src onto the tail of dst.
    int drain_to(const std::string& src, const std::string& dst);

    int purge(const std::string& queue);

    std::size_t depth(const std::string& queue) const;
    const QueueRecord& queue(const std::string& name) const;
    std::vector<std::string> queue_names() const;
    std::size_t total_queued_data() const;

    // Append directly to a queue, bypassing the exchange (control
    // messages addressed to one consumer's queue).
    void enqueue(const std::string& queue, const Message& msg);

    // Test hook: the next publish of this seq is counted but delivered to
    // no queue (auditor soundness checks).
    void drop_next_publish_of(std::uint64_t seq) { drop_seq_ = seq; }

    // Accounting hooks for the audit ledger.
    std::function<void(const Message&, int copies)> on_publish;
    std::function<void(const std::string& queue, const Message&)> on_consume;
    std::function<void(const std::string& queue, const Message&)> on_purge;

  private:
    QueueRecord& queue_mut(const std::string& name);
    ExchangeRecord& exchange_mut(const std::string& name);

    std::map<std::string, QueueRecord> queues_;
    std::map<std::string, ExchangeRecord> exchanges_;
    std::optional<std::uint64_t> drop_seq_;
};

}  // namespace shadowsim
