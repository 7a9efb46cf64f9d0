#include "shadowsim/sim.hpp"

namespace shadowsim {

namespace {

// splitmix64; mixes the seed with the stream-name hash so each named
// stream is an independent deterministic sequence.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, const std::string& name)
    : gen_(mix(seed ^ mix(std::hash<std::string>{}(name)))) {}

double RngStream::uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
}

Simulation::Simulation(std::uint64_t seed) : seed_(seed) {}

EventId Simulation::schedule_at(SimTime at, std::function<void()> fn) {
    if (at < now_) {
        throw ContractViolation("schedule_at: time " + std::to_string(at.us) +
                                "us is in the past (now=" +
                                std::to_string(now_.us) + "us)");
    }
    EventId id = next_id_++;
    queue_.push(Entry{at, next_seq_++, id});
    handlers_.emplace(id, std::move(fn));
    ++live_events_;
    return id;
}

EventId Simulation::schedule_in(Duration delay, std::function<void()> fn) {
    return schedule_at(now_ + delay, std::move(fn));
}

bool Simulation::cancel(EventId id) {
    auto it = handlers_.find(id);
    if (it == handlers_.end()) return false;
    handlers_.erase(it);
    --live_events_;
    return true;
}

void Simulation::dispatch_next() {
    Entry e = queue_.top();
    queue_.pop();
    auto it = handlers_.find(e.id);
    if (it == handlers_.end()) return;  // cancelled
    now_ = e.at;
    auto fn = std::move(it->second);
    handlers_.erase(it);
    --live_events_;
    fn();
    if (post_dispatch) post_dispatch();
}

SimTime Simulation::run_until(SimTime deadline) {
    while (!queue_.empty() && queue_.top().at <= deadline) {
        dispatch_next();
    }
    if (deadline > now_) now_ = deadline;
    return now_;
}

SimTime Simulation::run_until_idle(SimTime horizon) {
    while (live_events_ != 0 && !queue_.empty() &&
           queue_.top().at <= horizon) {
        dispatch_next();
    }
    return now_;
}

Duration Simulation::sample(const DurationModel& model,
                            const std::string& stream) {
    double value = model.median_s;
    if (model.kind == DurationModel::Kind::UniformJitter &&
        model.jitter_fraction > 0.0) {
        auto [it, inserted] = streams_.try_emplace(stream);
        if (inserted) it->second = RngStream(seed_, stream);
        double u = it->second.uniform();  // [0,1)
        value = model.median_s *
                (1.0 + model.jitter_fraction * (2.0 * u - 1.0));
    }
    Duration d = seconds(value);
    if (d.us <= 0) d.us = 1;  // sampled duration strictly positive
    return d;
}

}  // namespace shadowsim
