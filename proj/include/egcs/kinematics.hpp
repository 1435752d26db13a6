#pragma once

#include <algorithm>
#include <cmath>

#include "egcs/config.hpp"

namespace egcs {

enum class Phase { idle, accelerating, cruising, decelerating, doors };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::idle: return "idle";
    case Phase::accelerating: return "accelerating";
    case Phase::cruising: return "cruising";
    case Phase::decelerating: return "decelerating";
    case Phase::doors: return "doors";
  }
  return "?";
}

struct MotionSample {
  double offset = 0.0;  // distance covered since the plan started, >= 0
  double speed = 0.0;   // >= 0, along the travel direction
  Phase phase = Phase::idle;
};

/// Trapezoidal (or triangular, for short hops) velocity profile that starts
/// at speed v0 and comes to rest exactly `distance` metres further on.
struct TripPlan {
  double v0 = 0.0;
  double vpeak = 0.0;
  double distance = 0.0;
  double accel = 1.0;
  double decel = 1.0;
  double t_accel = 0.0;
  double t_cruise = 0.0;
  double t_decel = 0.0;
  double d_accel = 0.0;
  double d_cruise = 0.0;
  long steps = 1;  // infra-steps until arrival

  double duration() const { return t_accel + t_cruise + t_decel; }

  MotionSample at(double tau) const {
    if (tau <= 0.0) return {0.0, v0, v0 > 0 ? Phase::cruising : Phase::accelerating};
    if (tau < t_accel) {
      return {v0 * tau + 0.5 * accel * tau * tau, v0 + accel * tau, Phase::accelerating};
    }
    double u = tau - t_accel;
    if (u < t_cruise) return {d_accel + vpeak * u, vpeak, Phase::cruising};
    u -= t_cruise;
    if (u < t_decel) {
      double s = d_accel + d_cruise + vpeak * u - 0.5 * decel * u * u;
      return {std::min(s, distance), std::max(vpeak - decel * u, 0.0), Phase::decelerating};
    }
    return {distance, 0.0, Phase::idle};
  }
};

inline long steps_for(double seconds, double dt = kInfraStep) {
  if (seconds <= 0.0) return 0;
  return static_cast<long>(std::ceil(seconds / dt - 1e-9));
}

/// Plans a stop `distance` metres ahead from current speed `v0` (both along
/// the direction of travel). If the stop sits inside the braking distance by
/// rounding noise, brakes slightly harder than `accel` instead.
inline TripPlan plan_trip(double v0, double distance, double accel, double vmax,
                          double dt = kInfraStep) {
  TripPlan p;
  p.v0 = v0;
  p.distance = std::max(distance, 0.0);
  p.accel = accel;
  p.decel = accel;
  const double brake = v0 * v0 / (2.0 * accel);
  if (p.distance <= 0.0 && v0 <= 0.0) {
    p.steps = 1;
    return p;
  }
  if (p.distance < brake) {
    p.vpeak = v0;
    p.decel = v0 * v0 / (2.0 * p.distance);
    p.t_decel = v0 / p.decel;
  } else {
    p.vpeak = std::min(vmax, std::sqrt((2.0 * accel * p.distance + v0 * v0) / 2.0));
    p.vpeak = std::max(p.vpeak, v0);
    p.t_accel = (p.vpeak - v0) / accel;
    p.d_accel = (p.vpeak * p.vpeak - v0 * v0) / (2.0 * accel);
    p.t_decel = p.vpeak / accel;
    const double d_decel = p.vpeak * p.vpeak / (2.0 * accel);
    p.d_cruise = std::max(0.0, p.distance - p.d_accel - d_decel);
    p.t_cruise = p.vpeak > 0 ? p.d_cruise / p.vpeak : 0.0;
  }
  p.steps = std::max(1L, steps_for(p.duration(), dt));
  return p;
}

/// Travel time in seconds between two landings from rest to rest.
inline double rest_to_rest_time(const BuildingConfig& b, int from, int to) {
  const double d = std::abs(to - from) * b.floor_height;
  return plan_trip(0.0, d, b.acceleration, b.max_speed).duration();
}

}  // namespace egcs
