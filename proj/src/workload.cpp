#include "shadowsim/workload.hpp"

#include <algorithm>

namespace shadowsim {

Producer::Producer(Simulation& sim, Broker& broker, std::string exchange,
                   int rate_per_s)
    : sim_(sim), broker_(broker), exchange_(std::move(exchange)),
      rate_(rate_per_s) {}

void Producer::start() {
    if (running_ || rate_ <= 0) return;
    running_ = true;
    origin_ = sim_.now();
    schedule_next();
}

void Producer::stop() {
    running_ = false;
    if (pending_) {
        sim_.cancel(*pending_);
        pending_.reset();
    }
}

void Producer::schedule_next() {
    // Tick n fires at origin + n/rate, computed from n each time so the
    // interval is exact with no accumulated rounding.
    ++tick_;
    SimTime at = origin_ + SimTime{static_cast<std::int64_t>(
                               (tick_ * 1000000ULL) / rate_)};
    pending_ = sim_.schedule_at(at, [this] {
        pending_.reset();
        if (!running_) return;
        Message msg;
        msg.seq = next_seq_++;
        msg.publish_time = sim_.now();
        msg.kind = Message::Kind::Data;
        broker_.publish(exchange_, msg);
        schedule_next();
    });
}

Consumer::Consumer(Simulation& sim, Broker& broker, std::string pod_name,
                   ConsumerConfig cfg)
    : sim_(sim), broker_(broker), pod_(std::move(pod_name)), cfg_(cfg) {}

Duration Consumer::service_time() const {
    return Duration{static_cast<std::int64_t>(
        std::max<std::int64_t>(1, 1000000 / cfg_.mu_per_s))};
}

void Consumer::attach(const std::string& queue, Duration initial_delay) {
    detach();
    std::string q = queue;
    pending_ = sim_.schedule_in(initial_delay, [this, q] {
        pending_.reset();
        try_attach(q, Duration{});
    });
}

void Consumer::try_attach(const std::string& queue, Duration) {
    if (!broker_.has_queue(queue)) return;  // queue deleted underneath us
    if (!broker_.try_register_consumer(queue, pod_)) {
        // Someone still holds the queue; retry at poll cadence.
        std::string q = queue;
        pending_ = sim_.schedule_in(cfg_.idle_poll, [this, q] {
            pending_.reset();
            try_attach(q, Duration{});
        });
        return;
    }
    queue_ = queue;
    if (!paused_) schedule_step(Duration{});
}

void Consumer::detach() {
    if (pending_) {
        sim_.cancel(*pending_);
        pending_.reset();
    }
    if (queue_) {
        broker_.release_consumer(*queue_, pod_);
        queue_.reset();
    }
}

void Consumer::pause() {
    paused_ = true;
    if (pending_) {
        sim_.cancel(*pending_);
        pending_.reset();
    }
}

void Consumer::resume() {
    if (!paused_) return;
    paused_ = false;
    if (queue_) schedule_step(Duration{});
}

void Consumer::schedule_step(Duration delay) {
    if (pending_) sim_.cancel(*pending_);
    pending_ = sim_.schedule_in(delay, [this] {
        pending_.reset();
        step();
    });
}

void Consumer::step() {
    if (paused_ || !queue_) return;
    if (!broker_.has_queue(*queue_)) {
        queue_.reset();
        return;
    }
    auto msg = broker_.consume_next(*queue_, pod_);
    if (!msg) {
        schedule_step(cfg_.idle_poll);
        return;
    }
    process_message(*msg);
    // process_message may have switched queues (EndReplay); the switch
    // path schedules its own continuation.
    if (queue_ && !paused_ && !pending_) schedule_step(service_time());
}

void Consumer::process_message(const Message& msg) {
    switch (msg.kind) {
        case Message::Kind::Data: {
            bool duplicate = state_.applied.count(msg.seq) != 0;
            bool effect = false;
            if (!duplicate) {
                state_.applied.insert(msg.seq);
                state_.processed_count++;
                state_.last_seq = std::max(state_.last_seq, msg.seq);
                if (state_.mode == ConsumerMode::Normal) {
                    state_.side_effects_emitted++;
                    effect = true;
                }
            }
            if (on_apply)
                on_apply(pod_, msg.seq, duplicate, effect, state_.mode);
            break;
        }
        case Message::Kind::StartReplay:
            state_.mode = ConsumerMode::Replay;
            break;
        case Message::Kind::EndReplay:
            state_.mode = ConsumerMode::Normal;
            if (switch_target_) {
                std::string to = *switch_target_;
                switch_target_.reset();
                do_switch(to);
            }
            break;
    }
}

void Consumer::do_switch(const std::string& to) {
    if (pending_) {
        sim_.cancel(*pending_);
        pending_.reset();
    }
    if (queue_) {
        broker_.release_consumer(*queue_, pod_);
        queue_.reset();
    }
    try_attach(to, Duration{});
}

void Consumer::deliver_control(Message::Kind kind,
                               std::optional<std::string> switch_to,
                               Duration initial_delay) {
    switch (kind) {
        case Message::Kind::StartReplay:
            state_.mode = ConsumerMode::Replay;
            if (switch_to) attach(*switch_to, initial_delay);
            break;
        case Message::Kind::EndReplay:
            state_.mode = ConsumerMode::Normal;
            if (switch_to) attach(*switch_to, initial_delay);
            break;
        case Message::Kind::Data:
            throw ContractViolation("Data is not a control message");
    }
}

Consumer& WorkloadRegistry::create(Simulation& sim, Broker& broker,
                                   const std::string& pod_name,
                                   ConsumerConfig cfg) {
    auto c = std::make_unique<Consumer>(sim, broker, pod_name, cfg);
    auto& ref = *c;
    consumers_[pod_name] = std::move(c);
    return ref;
}

Consumer* WorkloadRegistry::find(const std::string& pod_name) {
    auto it = consumers_.find(pod_name);
    return it == consumers_.end() ? nullptr : it->second.get();
}

const Consumer* WorkloadRegistry::find(const std::string& pod_name) const {
    auto it = consumers_.find(pod_name);
    return it == consumers_.end() ? nullptr : it->second.get();
}

void WorkloadRegistry::detach_for(const std::string& pod_name) {
    if (Consumer* c = find(pod_name)) c->detach();
}

bool health_check(const Cluster& cluster, const WorkloadRegistry& reg,
                  const std::string& pod_name) {
    const PodRecord* p = cluster.find_pod(pod_name);
    if (!p || !p->live() || !p->ready) return false;
    return reg.find(pod_name) != nullptr;
}

}  // namespace shadowsim
