#pragma once

#include <functional>
#include <vector>

#include "egcs/sim.hpp"
#include "egcs/traffic.hpp"

namespace egcs::testing {

inline ArrivalGroup group(double t_s, int origin, int dest, int size = 1, double weight = 75.0) {
  ArrivalGroup g;
  g.t_s = t_s;
  g.origin = origin;
  g.destination = dest;
  g.weights_kg.assign(static_cast<std::size_t>(size), weight);
  return g;
}

inline TrafficTrace trace_of(std::vector<ArrivalGroup> groups, int day = 1) {
  TrafficTrace t;
  t.meta.day_of_week = day;
  t.groups = std::move(groups);
  return t;
}

inline BuildingConfig building(int elevators = 6) {
  BuildingConfig b;
  b.num_elevators = elevators;
  return b;
}

using Chooser = std::function<std::vector<int>(const World&, CallId)>;

/// Drives a world to the end with the given dispatch rule.
inline void run_to_end(World& w, const Chooser& choose) {
  while (true) {
    auto dp = w.run_until_next_decision();
    if (!dp.call) break;
    w.apply_dispatch(*dp.call, choose(w, *dp.call));
  }
}

inline Chooser always(std::vector<int> subset) {
  return [subset](const World&, CallId) { return subset; };
}

/// Steps with advance() until the pending decision appears (or terminal).
inline std::optional<CallId> step_to_decision(World& w, long limit = 10'000'000) {
  for (long i = 0; i < limit && !w.terminal(); ++i) {
    auto out = w.advance();
    if (out.new_hall_call) return out.new_hall_call;
  }
  return std::nullopt;
}

}  // namespace egcs::testing
