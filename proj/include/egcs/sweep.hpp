#pragma once

#include <cmath>
#include <optional>
#include <span>

namespace egcs {

enum class Direction : int { down = -1, none = 0, up = 1 };

inline Direction opposite(Direction d) { return static_cast<Direction>(-static_cast<int>(d)); }
inline int sign(Direction d) { return static_cast<int>(d); }
inline const char* to_string(Direction d) {
  return d == Direction::up ? "up" : d == Direction::down ? "down" : "none";
}

enum class StopSource { hall, car };

using CallId = int;
using PassengerId = int;

struct Stop {
  int landing = 0;
  StopSource source = StopSource::car;
  Direction call_dir = Direction::none;  // hall stops only
  CallId call = -1;                      // hall stops only

  bool is_hall() const { return source == StopSource::hall; }
};

// Collective-control sweep rules shared by the engine and the ETD rollout.
// A cart keeps going while any entry lies beyond it in its committed
// direction; opposite-direction hall calls beyond it are picked up at the
// turning point, i.e. only after every same-direction entry ahead is served.

inline bool beyond(int landing, int from, Direction dir) {
  return dir == Direction::up ? landing > from : dir == Direction::down ? landing < from : false;
}

inline bool has_stop_beyond(std::span<const Stop> stops, int from, Direction dir) {
  for (const auto& s : stops)
    if (beyond(s.landing, from, dir)) return true;
  return false;
}

inline bool has_stop_at(std::span<const Stop> stops, int landing) {
  for (const auto& s : stops)
    if (s.landing == landing) return true;
  return false;
}

inline std::optional<Direction> hall_direction_at(std::span<const Stop> stops, int landing,
                                                  Direction prefer) {
  std::optional<Direction> first;
  for (const auto& s : stops) {
    if (!s.is_hall() || s.landing != landing) continue;
    if (s.call_dir == prefer) return prefer;
    if (!first) first = s.call_dir;
  }
  return first;
}

/// Next stop when travelling in `dir`, considering landings from
/// `first_reachable` onwards (inclusive).
inline std::optional<int> choose_target(std::span<const Stop> stops, int first_reachable, Direction dir) {
  std::optional<int> along;
  std::optional<int> turn;
  const int s = sign(dir);
  for (const auto& st : stops) {
    if ((st.landing - first_reachable) * s < 0) continue;
    const bool same_way = !st.is_hall() || st.call_dir == dir;
    if (same_way) {
      if (!along || (st.landing - *along) * s < 0) along = st.landing;
    } else {
      if (!turn || (st.landing - *turn) * s > 0) turn = st.landing;
    }
  }
  return along ? along : turn;
}

/// Direction to serve after the doors open at `landing`, given the car
/// entries for this landing have already been cleared.
inline Direction service_direction(std::span<const Stop> stops, int landing, Direction current) {
  if (current != Direction::none && has_stop_beyond(stops, landing, current)) return current;
  if (auto d = hall_direction_at(stops, landing, current)) return *d;
  if (current != Direction::none && has_stop_beyond(stops, landing, opposite(current)))
    return opposite(current);
  return Direction::none;
}

/// Direction of the nearest entry from rest, ties going up.
inline Direction nearest_direction(std::span<const Stop> stops, int landing) {
  int best = -1;
  Direction dir = Direction::none;
  for (const auto& s : stops) {
    if (s.landing == landing) continue;
    const int d = std::abs(s.landing - landing);
    const Direction cand = s.landing > landing ? Direction::up : Direction::down;
    if (best < 0 || d < best || (d == best && cand == Direction::up)) {
      best = d;
      dir = cand;
    }
  }
  return dir;
}

}  // namespace egcs
