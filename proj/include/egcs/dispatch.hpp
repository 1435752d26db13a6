#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "egcs/rng.hpp"
#include "egcs/sim.hpp"

namespace egcs {

struct DispatchDecision {
  CallId call = -1;
  std::vector<int> elevators;
};

/// Deterministic forecast of one car working through its queue with no new
/// events: the same sweep rules, trip plans and dwell quantisation as the
/// engine, but jumping from stop to stop instead of ticking.
struct QueueForecast {
  std::map<PassengerId, long> event_step;  // alight step (riders) or pickup step (waiting)
  std::optional<long> call_served_step;    // doors close after serving the inserted call
  long end_step = 0;
};

namespace detail {

struct RolloutRider {
  PassengerId id;
  int destination;
  double weight;
};

class QueueRollout {
 public:
  QueueRollout(const World& world, const Elevator& car) : w_(world), b_(world.building()), c_(car) {
    for (PassengerId p : car.onboard) {
      const auto& px = world.passenger(p);
      riders_.push_back({p, px.destination, px.weight_kg});
    }
  }

  QueueForecast run(std::optional<CallId> inserted, long max_events = 10000) {
    inserted_ = inserted;
    if (inserted) insert(world_call(*inserted));
    for (long guard = 0; guard < max_events; ++guard) {
      if (c_.moving()) {
        t_ += c_.trip.steps - c_.trip_step;
        c_.position = b_.landing_position(c_.target);
        c_.velocity = 0.0;
        c_.landing = c_.target;
        process_stop();
      } else if (c_.phase == Phase::doors) {
        t_ += c_.door_steps_left;
        c_.door_steps_left = 0;
        depart();
      } else {
        break;
      }
    }
    out_.end_step = t_;
    return out_;
  }

 private:
  const HallCall& world_call(CallId id) const { return w_.call(id); }

  std::vector<PassengerId>& waiting_for(CallId id) {
    auto it = waiting_.find(id);
    if (it == waiting_.end()) it = waiting_.emplace(id, w_.call(id).waiting).first;
    return it->second;
  }

  void insert(const HallCall& c) {
    c_.stops.push_back({c.floor, StopSource::hall, c.direction, c.id});
    if (c_.phase == Phase::idle) {
      if (c_.landing == c.floor)
        process_stop();
      else
        depart();
    } else if (c_.phase == Phase::doors) {
      if (c_.landing == c.floor && (c_.service_dir == c.direction || c_.service_dir == Direction::none)) {
        if (c_.service_dir == Direction::none) {
          c_.direction = c.direction;
          c_.service_dir = c.direction;
        }
        const int n = board(c_.landing, c.direction);
        c_.door_steps_left += steps_for(b_.board_time_s * n);
        if (served_now_) {
          out_.call_served_step = t_ + c_.door_steps_left;
          served_now_ = false;
        }
      }
    } else {
      const auto t = choose_target(c_.stops, first_reachable(b_, c_), c_.direction);
      if (t && *t != c_.target) start_trip(*t, std::abs(c_.velocity));
    }
  }

  int board(int L, Direction d) {
    if (d == Direction::none) return 0;
    std::vector<CallId> calls;
    for (const auto& s : c_.stops)
      if (s.is_hall() && s.landing == L && s.call_dir == d &&
          std::find(calls.begin(), calls.end(), s.call) == calls.end())
        calls.push_back(s.call);
    std::erase_if(c_.stops, [&](const Stop& s) { return s.is_hall() && s.landing == L && s.call_dir == d; });
    int n = 0;
    for (CallId id : calls) {
      if (inserted_ && id == *inserted_) served_now_ = true;
      auto& wait = waiting_for(id);
      std::size_t k = 0;
      for (; k < wait.size(); ++k) {
        const auto& p = w_.passenger(wait[k]);
        if (c_.load_kg + p.weight_kg > b_.capacity_kg + 1e-9) break;
        c_.load_kg += p.weight_kg;
        out_.event_step.emplace(p.id, t_);
        ++n;
        // destination stays unknown until the car call is pressed, so the
        // rider adds load but no stop to the forecast
      }
      wait.erase(wait.begin(), wait.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return n;
  }

  void process_stop() {
    const int L = c_.landing;
    int persons = 0;
    std::erase_if(riders_, [&](const RolloutRider& r) {
      if (r.destination != L) return false;
      out_.event_step.emplace(r.id, t_);
      c_.load_kg -= r.weight;
      ++persons;
      return true;
    });
    std::erase_if(c_.stops, [&](const Stop& s) { return !s.is_hall() && s.landing == L; });
    const Direction d = service_direction(c_.stops, L, c_.direction);
    if (d != Direction::none) c_.direction = d;
    c_.service_dir = d;
    c_.phase = Phase::doors;
    persons += board(L, d);
    c_.door_steps_left = std::max(1L, steps_for(b_.door_cycle_s + b_.board_time_s * persons));
    if (served_now_) {
      out_.call_served_step = t_ + c_.door_steps_left;
      served_now_ = false;
    }
    if (d == Direction::none && c_.stops.empty()) c_.direction = Direction::none;
  }

  void start_trip(int target, double speed) {
    c_.target = target;
    c_.trip_origin = c_.position;
    c_.trip = plan_trip(speed, std::abs(b_.landing_position(target) - c_.position), b_.acceleration, b_.max_speed);
    c_.trip_step = 0;
    if (c_.phase == Phase::idle || c_.phase == Phase::doors) c_.phase = Phase::accelerating;
  }

  void depart() {
    const int L = c_.landing;
    c_.service_dir = Direction::none;
    if (c_.stops.empty()) {
      c_.phase = Phase::idle;
      c_.direction = Direction::none;
      return;
    }
    const bool ahead = c_.direction != Direction::none && has_stop_beyond(c_.stops, L, c_.direction);
    if (!ahead && has_stop_at(c_.stops, L)) {
      process_stop();
      return;
    }
    Direction dir = c_.direction;
    if (!ahead) {
      dir = c_.direction != Direction::none && has_stop_beyond(c_.stops, L, opposite(c_.direction))
                ? opposite(c_.direction)
                : nearest_direction(c_.stops, L);
    }
    c_.direction = dir;
    const auto target = choose_target(c_.stops, L + sign(dir), dir);
    if (!target) {
      c_.phase = Phase::idle;
      return;
    }
    c_.velocity = 0.0;
    start_trip(*target, 0.0);
  }

  const World& w_;
  const BuildingConfig& b_;
  Elevator c_;
  std::vector<RolloutRider> riders_;
  std::map<CallId, std::vector<PassengerId>> waiting_;
  std::optional<CallId> inserted_;
  bool served_now_ = false;
  long t_ = 0;
  QueueForecast out_;
};

}  // namespace detail

inline QueueForecast forecast_queue(const World& world, int elevator, std::optional<CallId> inserted = std::nullopt) {
  detail::QueueRollout r(world, world.elevator(elevator));
  return r.run(inserted);
}

struct EtdBreakdown {
  double etd_s = 0.0;    // until the car leaves the call floor with the new group
  double delay_s = 0.0;  // summed extra time for everyone the car already serves
  std::vector<std::pair<PassengerId, double>> delays;
  double cost() const { return etd_s + delay_s; }
};

/// Cost_e = ETD_e + sum_p Delay_{e,p}. The new group's destination is not
/// known before boarding, so ETD_e ends at service completion on the call
/// floor.
inline EtdBreakdown etd_breakdown(const World& world, int elevator, CallId call) {
  const auto base = forecast_queue(world, elevator);
  const auto with = forecast_queue(world, elevator, call);
  EtdBreakdown out;
  const long served = with.call_served_step ? *with.call_served_step : with.end_step;
  out.etd_s = static_cast<double>(served) * kInfraStep;
  const auto& group = world.call(call).group;
  for (const auto& [pid, t0] : base.event_step) {
    if (std::find(group.begin(), group.end(), pid) != group.end()) continue;
    auto it = with.event_step.find(pid);
    const long t1 = it != with.event_step.end() ? it->second : std::max(with.end_step, t0);
    const double d = static_cast<double>(t1 - t0) * kInfraStep;
    out.delays.emplace_back(pid, d);
    out.delay_s += d;
  }
  return out;
}

inline double etd_cost(const World& world, int elevator, CallId call) {
  return etd_breakdown(world, elevator, call).cost();
}

inline int argmin_lowest_id(const std::vector<double>& costs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(costs.size()); ++i)
    if (costs[static_cast<std::size_t>(i)] < costs[static_cast<std::size_t>(best)]) best = i;
  return best;
}

inline std::vector<double> etd_costs(const World& world, CallId call) {
  std::vector<double> costs;
  for (int e = 0; e < world.building().num_elevators; ++e) costs.push_back(etd_cost(world, e, call));
  return costs;
}

inline DispatchDecision etd_dispatch(const World& world, CallId call) {
  return {call, {argmin_lowest_id(etd_costs(world, call))}};
}

enum class SimpleKind { random, first, closest, sector, least_busy };

inline SimpleKind parse_simple_kind(const std::string& s) {
  if (s == "random") return SimpleKind::random;
  if (s == "first") return SimpleKind::first;
  if (s == "closest") return SimpleKind::closest;
  if (s == "sector") return SimpleKind::sector;
  if (s == "least_busy") return SimpleKind::least_busy;
  throw std::invalid_argument("unknown dispatcher '" + s + "'");
}

inline const char* to_string(SimpleKind k) {
  switch (k) {
    case SimpleKind::random: return "random";
    case SimpleKind::first: return "first";
    case SimpleKind::closest: return "closest";
    case SimpleKind::sector: return "sector";
    case SimpleKind::least_busy: return "least_busy";
  }
  return "?";
}

/// Zone owning a landing when the shaft is split into one contiguous zone
/// per elevator.
inline int sector_of(const BuildingConfig& b, int landing) {
  return std::min(b.num_elevators - 1, landing * b.num_elevators / b.num_landings);
}

inline DispatchDecision simple_dispatch(SimpleKind kind, const World& world, CallId call, Rng& rng) {
  const auto& b = world.building();
  const auto& c = world.call(call);
  const int n = b.num_elevators;
  int chosen = 0;
  switch (kind) {
    case SimpleKind::random:
      chosen = std::uniform_int_distribution<int>(0, n - 1)(rng);
      break;
    case SimpleKind::first:
      chosen = 0;
      break;
    case SimpleKind::closest: {
      std::vector<double> d;
      for (const auto& e : world.elevators()) d.push_back(std::abs(e.position - b.landing_position(c.floor)));
      chosen = argmin_lowest_id(d);
      break;
    }
    case SimpleKind::sector:
      chosen = sector_of(b, c.floor);
      break;
    case SimpleKind::least_busy: {
      std::vector<double> q;
      for (const auto& e : world.elevators()) q.push_back(static_cast<double>(e.queue_size()));
      chosen = argmin_lowest_id(q);
      break;
    }
  }
  return {call, {chosen}};
}

}  // namespace egcs
