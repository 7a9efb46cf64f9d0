#include "shadowsim/broker.hpp"

#include <algorithm>

namespace shadowsim {

void Broker::declare_exchange(const std::string& name) {
    exchanges_.try_emplace(name, ExchangeRecord{name, {}});
}

void Broker::declare_queue(const std::string& name) {
    queues_.try_emplace(name, QueueRecord{name, {}, {}, std::nullopt});
}

bool Broker::has_queue(const std::string& name) const {
    return queues_.count(name) != 0;
}

bool Broker::has_exchange(const std::string& name) const {
    return exchanges_.count(name) != 0;
}

void Broker::delete_queue(const std::string& name) {
    auto it = queues_.find(name);
    if (it == queues_.end()) throw UnknownQueue(name);
    for (const auto& ex : it->second.bound_to) {
        exchanges_.at(ex).bindings.erase(name);
    }
    queues_.erase(it);
}

QueueRecord& Broker::queue_mut(const std::string& name) {
    auto it = queues_.find(name);
    if (it == queues_.end()) throw UnknownQueue(name);
    return it->second;
}

ExchangeRecord& Broker::exchange_mut(const std::string& name) {
    auto it = exchanges_.find(name);
    if (it == exchanges_.end()) throw UnknownExchange(name);
    return it->second;
}

const QueueRecord& Broker::queue(const std::string& name) const {
    auto it = queues_.find(name);
    if (it == queues_.end()) throw UnknownQueue(name);
    return it->second;
}

int Broker::publish(const std::string& exchange, const Message& msg) {
    auto& ex = exchange_mut(exchange);
    bool dropped = msg.is_data() && drop_seq_ && *drop_seq_ == msg.seq;
    int copies = 0;
    if (!dropped) {
        for (const auto& qname : ex.bindings) {
            queues_.at(qname).messages.push_back(msg);
            ++copies;
        }
    } else {
        drop_seq_.reset();
    }
    if (on_publish) on_publish(msg, copies);
    return copies;
}

void Broker::bind(const std::string& exchange, const std::string& queue) {
    auto& ex = exchange_mut(exchange);
    auto& q = queue_mut(queue);
    ex.bindings.insert(queue);
    q.bound_to.insert(exchange);
}

void Broker::unbind(const std::string& exchange, const std::string& queue) {
    auto ex = exchanges_.find(exchange);
    if (ex == exchanges_.end()) throw UnknownExchange(exchange);
    auto q = queues_.find(queue);
    if (q == queues_.end()) throw UnknownQueue(queue);
    ex->second.bindings.erase(queue);
    q->second.bound_to.erase(exchange);
}

bool Broker::is_bound(const std::string& exchange,
                      const std::string& queue) const {
    auto it = exchanges_.find(exchange);
    return it != exchanges_.end() && it->second.bindings.count(queue) != 0;
}

bool Broker::try_register_consumer(const std::string& queue,
                                   const std::string& pod) {
    auto& q = queue_mut(queue);
    if (q.consumer && *q.consumer != pod) return false;
    q.consumer = pod;
    return true;
}

void Broker::release_consumer(const std::string& queue,
                              const std::string& pod) {
    auto it = queues_.find(queue);
    if (it == queues_.end()) return;  // queue already deleted
    if (it->second.consumer == pod) it->second.consumer.reset();
}

std::optional<Message> Broker::consume_next(const std::string& queue,
                                            const std::string& pod) {
    auto& q = queue_mut(queue);
    if (!q.consumer || *q.consumer != pod) throw WrongConsumer(queue);
    if (q.messages.empty()) return std::nullopt;
    Message msg = q.messages.front();
    q.messages.pop_front();
    if (on_consume) on_consume(queue, msg);
    return msg;
}

int Broker::drain_to(const std::string& src, const std::string& dst) {
    auto& s = queue_mut(src);
    auto& d = queue_mut(dst);
    int moved = static_cast<int>(s.messages.size());
    for (auto& m : s.messages) d.messages.push_back(m);
    s.messages.clear();
    return moved;
}

int Broker::purge(const std::string& queue) {
    auto& q = queue_mut(queue);
    int removed = static_cast<int>(q.messages.size());
    if (on_purge) {
        for (const auto& m : q.messages) on_purge(queue, m);
    }
    q.messages.clear();
    return removed;
}

std::size_t Broker::depth(const std::string& queue) const {
    return this->queue(queue).messages.size();
}

std::vector<std::string> Broker::queue_names() const {
    std::vector<std::string> names;
    names.reserve(queues_.size());
    for (const auto& [n, q] : queues_) names.push_back(n);
    return names;
}

std::size_t Broker::total_queued_data() const {
    std::size_t n = 0;
    for (const auto& [name, q] : queues_) {
        n += static_cast<std::size_t>(
            std::count_if(q.messages.begin(), q.messages.end(),
                          [](const Message& m) { return m.is_data(); }));
    }
    return n;
}

}  // namespace shadowsim
