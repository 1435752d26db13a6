#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "egcs/config.hpp"
#include "egcs/kinematics.hpp"
#include "egcs/sweep.hpp"
#include "egcs/traffic.hpp"

namespace egcs {

struct Passenger {
  PassengerId id = -1;
  double arrival_time_s = 0.0;
  int origin = 0;
  int destination = 0;
  double weight_kg = 0.0;
  CallId call = -1;
  std::optional<double> boarded_time_s;
  std::optional<double> alighted_time_s;
};

struct HallCall {
  CallId id = -1;
  int floor = 0;
  Direction direction = Direction::up;
  double registered_time_s = 0.0;
  std::vector<PassengerId> group;    // every member
  std::vector<PassengerId> waiting;  // members still on the landing
  std::vector<int> assigned_elevators;
  std::optional<long> reprompt_step;
  int prompts = 0;

  std::optional<double> reprompt_deadline_s() const {
    if (!reprompt_step) return std::nullopt;
    return static_cast<double>(*reprompt_step) * kInfraStep;
  }
};

struct Elevator {
  int id = 0;
  double position = 0.0;  // metres above landing 0
  double velocity = 0.0;  // signed, up positive
  Phase phase = Phase::idle;
  Direction direction = Direction::none;  // committed sweep direction
  std::vector<Stop> stops;
  std::vector<PassengerId> onboard;
  double load_kg = 0.0;

  // motion bookkeeping
  int landing = 0;  // valid while at rest
  int target = 0;   // valid while moving
  double trip_origin = 0.0;
  TripPlan trip;
  long trip_step = 0;
  long door_steps_left = 0;
  Direction service_dir = Direction::none;

  bool moving() const {
    return phase == Phase::accelerating || phase == Phase::cruising || phase == Phase::decelerating;
  }
  std::size_t queue_size() const { return stops.size(); }
};

enum class RewardComponent { wait_floor, wait_elev, loading, arrival, moving, elevator_full, zero_elevators };

inline const char* to_string(RewardComponent c) {
  switch (c) {
    case RewardComponent::wait_floor: return "wait_floor";
    case RewardComponent::wait_elev: return "wait_elev";
    case RewardComponent::loading: return "loading";
    case RewardComponent::arrival: return "arrival";
    case RewardComponent::moving: return "moving";
    case RewardComponent::elevator_full: return "elevator_full";
    case RewardComponent::zero_elevators: return "zero_elevators";
  }
  return "?";
}

/// Per-component reward accumulators, in hundredths of a reward unit.
struct RewardLedger {
  std::int64_t wait_floor = 0;
  std::int64_t wait_elev = 0;
  std::int64_t loading = 0;
  std::int64_t arrival = 0;
  std::int64_t moving = 0;
  std::int64_t elevator_full = 0;
  std::int64_t zero_elevators = 0;

  std::int64_t total_centi() const {
    return wait_floor + wait_elev + loading + arrival + moving + elevator_full + zero_elevators;
  }
  double total() const { return static_cast<double>(total_centi()) * kRewardUnit; }
  double value(RewardComponent c) const { return static_cast<double>(centi(c)) * kRewardUnit; }
  std::int64_t centi(RewardComponent c) const {
    switch (c) {
      case RewardComponent::wait_floor: return wait_floor;
      case RewardComponent::wait_elev: return wait_elev;
      case RewardComponent::loading: return loading;
      case RewardComponent::arrival: return arrival;
      case RewardComponent::moving: return moving;
      case RewardComponent::elevator_full: return elevator_full;
      case RewardComponent::zero_elevators: return zero_elevators;
    }
    return 0;
  }

  RewardLedger& operator+=(const RewardLedger& o) {
    wait_floor += o.wait_floor;
    wait_elev += o.wait_elev;
    loading += o.loading;
    arrival += o.arrival;
    moving += o.moving;
    elevator_full += o.elevator_full;
    zero_elevators += o.zero_elevators;
    return *this;
  }
  bool operator==(const RewardLedger&) const = default;
};

struct InfraStepOutcome {
  RewardLedger rewards_emitted;
  std::optional<CallId> new_hall_call;

  double reward() const { return rewards_emitted.total(); }
};

struct DecisionPoint {
  std::optional<CallId> call;
  std::vector<double> rewards;  // one entry per infra-step
  long n_infra = 0;
  bool terminal = false;
};

struct Event {
  double t_s = 0.0;
  const char* kind = "";
  int elevator = -1;
  int floor = -1;
  int passenger = -1;
  const char* reward_component = "";
  double value = 0.0;
};

inline nlohmann::json to_json(const Event& e) {
  nlohmann::json j{{"t_s", e.t_s}, {"kind", e.kind}};
  j["elevator"] = e.elevator >= 0 ? nlohmann::json(e.elevator) : nlohmann::json();
  j["floor"] = e.floor >= 0 ? nlohmann::json(e.floor) : nlohmann::json();
  j["passenger"] = e.passenger >= 0 ? nlohmann::json(e.passenger) : nlohmann::json();
  j["reward_component"] = *e.reward_component ? nlohmann::json(e.reward_component) : nlohmann::json();
  j["value"] = e.value;
  return j;
}

using EventSink = std::function<void(const Event&)>;

/// One decision record per prompt, kept for reporting.
struct DispatchRecord {
  CallId call = -1;
  double t_s = 0.0;
  int elevators_sent = 0;
};

/// First landing a moving car can still stop at, given full braking.
inline int first_reachable(const BuildingConfig& b, const Elevator& e) {
  if (e.trip_step == 0 && e.velocity == 0.0) return e.landing + sign(e.direction);
  const double speed = std::abs(e.velocity);
  const double stop_pos = e.position + sign(e.direction) * speed * speed / (2.0 * b.acceleration);
  const double f = stop_pos / b.floor_height;
  return e.direction == Direction::up ? static_cast<int>(std::ceil(f - 1e-6))
                                      : static_cast<int>(std::floor(f + 1e-6));
}

/// Discrete-event elevator group simulation advanced in fixed infra-steps.
/// The world pauses (returns a hall call) whenever a new group registers a
/// call; the caller answers with `apply_dispatch` before advancing again.
class World {
 public:
  static constexpr double kZeroElevatorRepromptS = 30.0;

  World(BuildingConfig building, TrafficTrace trace, RewardWeights weights = {},
        std::vector<int> start_landings = {})
      : b_(std::move(building)), w_(weights), trace_(std::move(trace)) {
    b_.validate();
    if (!start_landings.empty() && static_cast<int>(start_landings.size()) != b_.num_elevators)
      throw std::invalid_argument("start_landings must list every elevator");
    for (const auto& g : trace_.groups) {
      if (g.origin < 0 || g.origin >= b_.num_landings || g.destination < 0 ||
          g.destination >= b_.num_landings)
        throw std::invalid_argument("trace landing outside the building");
    }
    cars_.resize(static_cast<std::size_t>(b_.num_elevators));
    for (int i = 0; i < b_.num_elevators; ++i) {
      auto& e = cars_[static_cast<std::size_t>(i)];
      e.id = i;
      e.landing = start_landings.empty() ? 0 : start_landings[static_cast<std::size_t>(i)];
      if (e.landing < 0 || e.landing >= b_.num_landings) throw std::invalid_argument("start landing out of range");
      e.position = b_.landing_position(e.landing);
    }
  }

  const BuildingConfig& building() const { return b_; }
  const RewardWeights& weights() const { return w_; }
  const TrafficTrace& trace() const { return trace_; }
  long step() const { return step_; }
  double now() const { return static_cast<double>(step_) * kInfraStep; }
  int day_of_week() const { return trace_.meta.day_of_week; }

  const std::vector<Elevator>& elevators() const { return cars_; }
  const Elevator& elevator(int id) const { return cars_.at(static_cast<std::size_t>(id)); }
  const std::vector<Passenger>& passengers() const { return pax_; }
  const Passenger& passenger(PassengerId id) const { return pax_.at(static_cast<std::size_t>(id)); }
  const std::vector<HallCall>& calls() const { return calls_; }
  const HallCall& call(CallId id) const { return calls_.at(static_cast<std::size_t>(id)); }
  const RewardLedger& ledger() const { return ledger_; }
  const std::vector<DispatchRecord>& dispatch_log() const { return dispatches_; }
  std::optional<CallId> pending_decision() const { return pending_; }

  std::size_t passengers_created() const { return pax_.size(); }
  std::size_t passengers_waiting() const { return waiting_count_; }
  std::size_t passengers_onboard() const { return onboard_count_; }
  std::size_t passengers_delivered() const { return delivered_count_; }
  std::size_t sweep_violations() const { return sweep_violations_; }

  void set_event_sink(EventSink sink) { sink_ = std::move(sink); }

  bool terminal() const {
    return next_group_ >= trace_.groups.size() && waiting_count_ == 0 && onboard_count_ == 0 &&
           registration_.empty() && !pending_;
  }

  InfraStepOutcome advance() {
    if (pending_) throw std::logic_error("advance() called with an unanswered hall call");
    ++step_;
    RewardLedger delta;
    int moving = 0;
    for (auto& e : cars_) {
      if (e.moving()) ++moving;
      tick(e, delta);
    }
    delta.moving += w_.moving * moving;
    delta.wait_floor += w_.waiting * static_cast<std::int64_t>(waiting_count_);
    delta.wait_elev += w_.waiting * static_cast<std::int64_t>(onboard_count_);
    ledger_ += delta;

    InfraStepOutcome out;
    out.rewards_emitted = carry_;
    out.rewards_emitted += delta;
    carry_ = {};

    register_arrivals();
    check_reprompts();
    if (!registration_.empty()) {
      const CallId id = registration_.front();
      registration_.pop_front();
      auto& c = calls_[static_cast<std::size_t>(id)];
      if (c.prompts == 0) c.registered_time_s = now();
      ++c.prompts;
      pending_ = id;
      out.new_hall_call = id;
      emit({now(), c.prompts == 1 ? "hall_call" : "reprompt", -1, c.floor, -1, "", static_cast<double>(sign(c.direction))});
    }
    return out;
  }

  DecisionPoint run_until_next_decision() {
    if (pending_) throw std::logic_error("previous hall call has not been dispatched");
    DecisionPoint dp;
    while (!terminal()) {
      fast_forward(dp.rewards);
      auto out = advance();
      dp.rewards.push_back(out.reward());
      if (out.new_hall_call) {
        dp.call = out.new_hall_call;
        break;
      }
    }
    dp.n_infra = static_cast<long>(dp.rewards.size());
    dp.terminal = !dp.call && terminal();
    return dp;
  }

  /// Sends the listed elevators to the pending call. An empty subset incurs
  /// the zero-elevator penalty and re-prompts the call 30 s later.
  void apply_dispatch(CallId id, std::span<const int> subset, int max_subset = 0) {
    if (!pending_ || *pending_ != id) throw std::invalid_argument("call is not the pending decision");
    if (max_subset > 0 && static_cast<int>(subset.size()) > max_subset)
      throw std::invalid_argument("dispatch subset exceeds the configured maximum");
    std::vector<int> seen;
    for (int e : subset) {
      if (e < 0 || e >= b_.num_elevators) throw std::invalid_argument("unknown elevator id " + std::to_string(e));
      if (std::find(seen.begin(), seen.end(), e) != seen.end())
        throw std::invalid_argument("duplicate elevator id " + std::to_string(e));
      seen.push_back(e);
    }
    pending_.reset();
    auto& c = calls_[static_cast<std::size_t>(id)];
    dispatches_.push_back({id, now(), static_cast<int>(subset.size())});
    if (subset.empty()) {
      RewardLedger pen;
      pen.zero_elevators = w_.zero_elevators;
      book_carry(pen);
      c.reprompt_step = step_ + steps_for(kZeroElevatorRepromptS);
      stranded_.push_back(id);
      emit({now(), "zero_elevators", -1, c.floor, -1, "zero_elevators", pen.total()});
      return;
    }
    for (int e : subset) {
      c.assigned_elevators.push_back(e);
      emit({now(), "dispatch", e, c.floor, -1, "", 0.0});
      insert_hall_stop(cars_[static_cast<std::size_t>(e)], c);
    }
  }

 private:
  void emit(const Event& e) {
    if (sink_) sink_(e);
  }

  void book_carry(const RewardLedger& r) {
    carry_ += r;
    ledger_ += r;
  }

  long arrival_step(const ArrivalGroup& g) const { return std::max(1L, steps_for(g.t_s)); }

  bool quiescent() const {
    if (waiting_count_ || onboard_count_ || !registration_.empty() || !stranded_.empty()) return false;
    if (carry_ != RewardLedger{}) return false;
    for (const auto& e : cars_)
      if (e.phase != Phase::idle) return false;
    return true;
  }

  // An idle, empty building changes nothing but the clock, so the gap up to
  // the next arrival is skipped in one go (emitting the same zero rewards).
  void fast_forward(std::vector<double>& rewards) {
    if (next_group_ >= trace_.groups.size() || !quiescent()) return;
    const long target = arrival_step(trace_.groups[next_group_]) - 1;
    if (target <= step_) return;
    rewards.insert(rewards.end(), static_cast<std::size_t>(target - step_), 0.0);
    step_ = target;
  }

  void register_arrivals() {
    while (next_group_ < trace_.groups.size() && arrival_step(trace_.groups[next_group_]) <= step_) {
      const auto& g = trace_.groups[next_group_++];
      HallCall c;
      c.id = static_cast<CallId>(calls_.size());
      c.floor = g.origin;
      c.direction = g.destination > g.origin ? Direction::up : Direction::down;
      for (double wkg : g.weights_kg) {
        Passenger p;
        p.id = static_cast<PassengerId>(pax_.size());
        p.arrival_time_s = g.t_s;
        p.origin = g.origin;
        p.destination = g.destination;
        p.weight_kg = wkg;
        p.call = c.id;
        c.group.push_back(p.id);
        c.waiting.push_back(p.id);
        emit({now(), "arrival", -1, g.origin, p.id, "", wkg});
        pax_.push_back(p);
      }
      waiting_count_ += c.waiting.size();
      registration_.push_back(c.id);
      calls_.push_back(std::move(c));
    }
  }

  bool call_has_entries(CallId id) const {
    for (const auto& e : cars_)
      for (const auto& s : e.stops)
        if (s.call == id) return true;
    return false;
  }

  void check_reprompts() {
    for (std::size_t i = 0; i < stranded_.size();) {
      auto& c = calls_[static_cast<std::size_t>(stranded_[i])];
      if (!c.reprompt_step || *c.reprompt_step > step_) {
        ++i;
        continue;
      }
      c.reprompt_step.reset();
      if (!c.waiting.empty() && !call_has_entries(c.id)) registration_.push_back(c.id);
      stranded_.erase(stranded_.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }

  void note_direction(Elevator& e, Direction next) {
    if (e.direction != Direction::none && next == opposite(e.direction)) {
      if (has_stop_beyond(e.stops, e.landing, e.direction)) ++sweep_violations_;
      emit({now(), "reverse", e.id, e.landing, -1, "", static_cast<double>(sign(next))});
    }
    e.direction = next;
  }

  void tick(Elevator& e, RewardLedger& delta) {
    if (e.moving()) {
      ++e.trip_step;
      if (e.trip_step >= e.trip.steps) {
        e.position = b_.landing_position(e.target);
        e.velocity = 0.0;
        e.landing = e.target;
        emit({now(), "stop", e.id, e.landing, -1, "", 0.0});
        process_stop(e, delta);
      } else {
        const auto m = e.trip.at(static_cast<double>(e.trip_step) * kInfraStep);
        const int s = sign(e.direction);
        e.position = std::clamp(e.trip_origin + s * m.offset, 0.0, b_.building_height());
        e.velocity = s * m.speed;
        e.phase = m.phase == Phase::idle ? Phase::decelerating : m.phase;
      }
    } else if (e.phase == Phase::doors) {
      if (--e.door_steps_left <= 0) depart(e, delta);
    }
  }

  /// Alight, pick a service direction, board, and open the doors for the
  /// dwell time at the car's current landing.
  void process_stop(Elevator& e, RewardLedger& delta) {
    const int L = e.landing;
    int persons = 0;
    for (std::size_t i = 0; i < e.onboard.size();) {
      auto& p = pax_[static_cast<std::size_t>(e.onboard[i])];
      if (p.destination != L) {
        ++i;
        continue;
      }
      p.alighted_time_s = now();
      e.load_kg -= p.weight_kg;
      delta.arrival += w_.arrival;
      emit({now(), "alight", e.id, L, p.id, "arrival", w_.arrival * kRewardUnit});
      e.onboard.erase(e.onboard.begin() + static_cast<std::ptrdiff_t>(i));
      --onboard_count_;
      ++delivered_count_;
      ++persons;
    }
    if (e.onboard.empty()) e.load_kg = 0.0;
    std::erase_if(e.stops, [&](const Stop& s) { return !s.is_hall() && s.landing == L; });

    const Direction d = service_direction(e.stops, L, e.direction);
    if (d != Direction::none) note_direction(e, d);
    e.service_dir = d;
    e.phase = Phase::doors;
    persons += board_at(e, L, d, delta);
    e.door_steps_left = std::max(1L, steps_for(b_.door_cycle_s + b_.board_time_s * persons));
    finish_leftovers(e);
    if (d == Direction::none && e.stops.empty()) e.direction = Direction::none;
  }

  /// Boards waiting members of every call assigned to this car at landing L
  /// in direction d. Returns the number boarded.
  int board_at(Elevator& e, int L, Direction d, RewardLedger& delta) {
    if (d == Direction::none) return 0;
    int boarded = 0;
    bool blocked = false;
    std::vector<CallId> served;
    for (const auto& s : e.stops)
      if (s.is_hall() && s.landing == L && s.call_dir == d &&
          std::find(served.begin(), served.end(), s.call) == served.end())
        served.push_back(s.call);
    std::erase_if(e.stops, [&](const Stop& s) { return s.is_hall() && s.landing == L && s.call_dir == d; });
    for (CallId id : served) {
      auto& c = calls_[static_cast<std::size_t>(id)];
      std::size_t k = 0;
      for (; k < c.waiting.size(); ++k) {
        auto& p = pax_[static_cast<std::size_t>(c.waiting[k])];
        if (e.load_kg + p.weight_kg > b_.capacity_kg + 1e-9) break;
        p.boarded_time_s = now();
        e.load_kg += p.weight_kg;
        e.onboard.push_back(p.id);
        delta.loading += w_.loading;
        emit({now(), "board", e.id, L, p.id, "loading", w_.loading * kRewardUnit});
        if (!has_car_stop(e, p.destination)) e.stops.push_back({p.destination, StopSource::car, Direction::none, -1});
        ++boarded;
      }
      if (k == 0 && !c.waiting.empty()) blocked = true;
      c.waiting.erase(c.waiting.begin(), c.waiting.begin() + static_cast<std::ptrdiff_t>(k));
      waiting_count_ -= k;
      onboard_count_ += k;
      if (!c.waiting.empty()) leftovers_.push_back(id);
    }
    if (blocked) {
      delta.elevator_full += w_.elevator_full;
      emit({now(), "full", e.id, L, -1, "elevator_full", w_.elevator_full * kRewardUnit});
    }
    return boarded;
  }

  // Passengers left behind press the button again once the doors close.
  void finish_leftovers(const Elevator& e) {
    for (CallId id : leftovers_) {
      auto& c = calls_[static_cast<std::size_t>(id)];
      const long when = step_ + e.door_steps_left + 1;
      c.reprompt_step = c.reprompt_step ? std::max(*c.reprompt_step, when) : when;
      if (std::find(stranded_.begin(), stranded_.end(), id) == stranded_.end()) stranded_.push_back(id);
    }
    leftovers_.clear();
  }

  static bool has_car_stop(const Elevator& e, int landing) {
    for (const auto& s : e.stops)
      if (!s.is_hall() && s.landing == landing) return true;
    return false;
  }

  void start_trip(Elevator& e, int target, double speed) {
    e.target = target;
    e.trip_origin = e.position;
    e.trip = plan_trip(speed, std::abs(b_.landing_position(target) - e.position), b_.acceleration, b_.max_speed);
    e.trip_step = 0;
    if (e.phase == Phase::idle || e.phase == Phase::doors) e.phase = Phase::accelerating;
  }

  void depart(Elevator& e, RewardLedger& delta) {
    const int L = e.landing;
    e.service_dir = Direction::none;
    if (e.stops.empty()) {
      e.phase = Phase::idle;
      e.direction = Direction::none;
      return;
    }
    const bool ahead = e.direction != Direction::none && has_stop_beyond(e.stops, L, e.direction);
    if (!ahead && has_stop_at(e.stops, L)) {
      // only opposite-direction calls left here: turn around and reopen
      process_stop(e, delta);
      return;
    }
    Direction dir = e.direction;
    if (!ahead) {
      dir = e.direction != Direction::none && has_stop_beyond(e.stops, L, opposite(e.direction))
                ? opposite(e.direction)
                : nearest_direction(e.stops, L);
    }
    note_direction(e, dir);
    const auto target = choose_target(e.stops, L + sign(dir), dir);
    if (!target) throw std::logic_error("sweep found no target despite queued stops");
    emit({now(), "depart", e.id, L, -1, "", static_cast<double>(*target)});
    start_trip(e, *target, 0.0);
  }

  void insert_hall_stop(Elevator& e, const HallCall& c) {
    e.stops.push_back({c.floor, StopSource::hall, c.direction, c.id});
    if (e.phase == Phase::idle) {
      if (e.landing == c.floor) {
        process_stop(e, carry_scratch_);
        book_carry(carry_scratch_);
        carry_scratch_ = {};
      } else {
        depart(e, carry_scratch_);
      }
    } else if (e.phase == Phase::doors) {
      if (e.landing == c.floor && (e.service_dir == c.direction || e.service_dir == Direction::none)) {
        if (e.service_dir == Direction::none) {
          note_direction(e, c.direction);
          e.service_dir = c.direction;
        }
        const int n = board_at(e, e.landing, c.direction, carry_scratch_);
        e.door_steps_left += steps_for(b_.board_time_s * n);
        finish_leftovers(e);
        book_carry(carry_scratch_);
        carry_scratch_ = {};
      }
    } else {
      retarget(e);
    }
  }

  void retarget(Elevator& e) {
    const auto t = choose_target(e.stops, first_reachable(b_, e), e.direction);
    if (!t || *t == e.target) return;
    start_trip(e, *t, std::abs(e.velocity));
  }

  BuildingConfig b_;
  RewardWeights w_;
  TrafficTrace trace_;
  std::vector<Elevator> cars_;
  std::vector<Passenger> pax_;
  std::vector<HallCall> calls_;
  std::vector<DispatchRecord> dispatches_;
  std::deque<CallId> registration_;
  std::vector<CallId> stranded_;
  std::vector<CallId> leftovers_;
  std::optional<CallId> pending_;
  RewardLedger ledger_;
  RewardLedger carry_;
  RewardLedger carry_scratch_;
  std::size_t next_group_ = 0;
  long step_ = 0;
  std::size_t waiting_count_ = 0;
  std::size_t onboard_count_ = 0;
  std::size_t delivered_count_ = 0;
  std::size_t sweep_violations_ = 0;
  EventSink sink_;
};

}  // namespace egcs
