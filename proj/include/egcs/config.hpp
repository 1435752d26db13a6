#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace egcs {

/// Fixed simulation tick in seconds.
inline constexpr double kInfraStep = 0.1;

struct BuildingConfig {
  int num_elevators = 6;
  int num_landings = 16;
  double floor_height = 3.3;     // m
  double max_speed = 2.5;        // m/s
  double acceleration = 1.0;     // m/s^2
  double capacity_kg = 1000.0;
  double door_cycle_s = 4.0;
  double board_time_s = 1.0;     // per boarding or alighting person
  double infra_step_s = kInfraStep;

  double building_height() const { return (num_landings - 1) * floor_height; }
  double landing_position(int landing) const { return landing * floor_height; }

  void validate() const {
    if (num_elevators < 1) throw std::invalid_argument("num_elevators must be >= 1");
    if (num_landings < 2) throw std::invalid_argument("num_landings must be >= 2");
    if (!(floor_height > 0)) throw std::invalid_argument("floor_height must be > 0");
    if (!(max_speed > 0)) throw std::invalid_argument("max_speed must be > 0");
    if (!(acceleration > 0)) throw std::invalid_argument("acceleration must be > 0");
    if (!(capacity_kg > 0)) throw std::invalid_argument("capacity_kg must be > 0");
    if (door_cycle_s < 0 || board_time_s < 0) throw std::invalid_argument("dwell times must be >= 0");
    if (infra_step_s != kInfraStep) throw std::invalid_argument("infra_step_s is fixed at 0.1");
  }

  bool operator==(const BuildingConfig&) const = default;
};

/// Reward weights in hundredths of a reward unit. Integer bookkeeping keeps
/// the ledger exact and its decomposition bit-reproducible.
struct RewardWeights {
  std::int64_t moving = -1;           // per moving elevator per infra-step
  std::int64_t waiting = -1;          // per waiting or riding passenger per infra-step
  std::int64_t elevator_full = -1000;
  std::int64_t arrival = 200;
  std::int64_t loading = 200;
  std::int64_t zero_elevators = -10000;

  bool operator==(const RewardWeights&) const = default;
};

inline constexpr double kRewardUnit = 0.01;

inline void to_json(nlohmann::json& j, const BuildingConfig& c) {
  j = nlohmann::json{{"num_elevators", c.num_elevators}, {"num_landings", c.num_landings},
                     {"floor_height", c.floor_height},   {"max_speed", c.max_speed},
                     {"acceleration", c.acceleration},   {"capacity_kg", c.capacity_kg},
                     {"door_cycle_s", c.door_cycle_s},   {"board_time_s", c.board_time_s},
                     {"infra_step_s", c.infra_step_s}};
}

inline void from_json(const nlohmann::json& j, BuildingConfig& c) {
  BuildingConfig d;
  c.num_elevators = j.value("num_elevators", d.num_elevators);
  c.num_landings = j.value("num_landings", d.num_landings);
  c.floor_height = j.value("floor_height", d.floor_height);
  c.max_speed = j.value("max_speed", d.max_speed);
  c.acceleration = j.value("acceleration", d.acceleration);
  c.capacity_kg = j.value("capacity_kg", d.capacity_kg);
  c.door_cycle_s = j.value("door_cycle_s", d.door_cycle_s);
  c.board_time_s = j.value("board_time_s", d.board_time_s);
  c.infra_step_s = j.value("infra_step_s", d.infra_step_s);
}

}  // namespace egcs
