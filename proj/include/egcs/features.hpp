#pragma once

#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "egcs/dispatch.hpp"
#include "egcs/rng.hpp"
#include "egcs/sim.hpp"

namespace egcs {

/// Agent-observable snapshot at a decision point.
struct StateVector {
  int call_floor = 0;
  int call_direction = 1;  // -1 down, +1 up
  double time_of_day = 0.0;
  int day_of_week = 1;
  std::vector<double> position_norm;
  std::vector<double> etd_score;
  std::vector<double> speed;
  std::vector<double> load_kg;

  static int dimension(int num_elevators) { return 4 + 4 * num_elevators; }

  /// Flat layout: call floor, direction, time, day, then the four
  /// per-elevator blocks in elevator order.
  Eigen::VectorXd flatten() const {
    const auto n = static_cast<Eigen::Index>(position_norm.size());
    Eigen::VectorXd x(4 + 4 * n);
    x[0] = call_floor;
    x[1] = call_direction;
    x[2] = time_of_day;
    x[3] = day_of_week;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      x[4 + i] = position_norm[k];
      x[4 + n + i] = etd_score[k];
      x[4 + 2 * n + i] = speed[k];
      x[4 + 3 * n + i] = load_kg[k];
    }
    return x;
  }

  bool operator==(const StateVector&) const = default;
};

inline StateVector featurize(const World& world, CallId call) {
  const auto& b = world.building();
  const auto& c = world.call(call);
  StateVector s;
  s.call_floor = c.floor;
  s.call_direction = sign(c.direction);
  s.time_of_day = std::fmod(world.now(), 86400.0) / 86400.0;
  s.day_of_week = world.day_of_week();
  const double height = b.building_height();
  for (const auto& e : world.elevators()) {
    s.position_norm.push_back(std::clamp(e.position / height, 0.0, 1.0));
    s.etd_score.push_back(etd_cost(world, e.id, call));
    s.speed.push_back(e.velocity);
    s.load_kg.push_back(e.load_kg);
  }
  return s;
}

/// Per-feature z-score statistics, fitted once and then frozen.
struct NormStats {
  static constexpr double kMinSd = 1e-6;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;

  int dim() const { return static_cast<int>(mean.size()); }

  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const {
    if (x.size() != mean.size()) throw std::invalid_argument("state dimension does not match norm stats");
    return ((x - mean).array() / sd.array()).matrix();
  }
  Eigen::VectorXd denormalize(const Eigen::VectorXd& z) const {
    return (z.array() * sd.array()).matrix() + mean;
  }

  std::string hash() const {
    std::string bytes;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      bytes += nlohmann::json(mean[i]).dump() + ",";
      bytes += nlohmann::json(sd[i]).dump() + ";";
    }
    return hex64(fnv1a(bytes));
  }
};

inline NormStats fit_norm_stats(std::span<const Eigen::VectorXd> states) {
  if (states.size() < 2) throw std::invalid_argument("need at least two states to fit normalisation");
  const auto d = states.front().size();
  NormStats s;
  s.mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : states) {
    if (x.size() != d) throw std::invalid_argument("inconsistent state dimensions");
    s.mean += x;
  }
  s.mean /= static_cast<double>(states.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& x : states) var += (x - s.mean).array().square().matrix();
  var /= static_cast<double>(states.size());
  s.sd = var.array().sqrt().max(NormStats::kMinSd).matrix();
  return s;
}

inline nlohmann::json to_json(const NormStats& s) {
  std::vector<double> m(s.mean.data(), s.mean.data() + s.mean.size());
  std::vector<double> d(s.sd.data(), s.sd.data() + s.sd.size());
  return {{"means", m}, {"sds", d}, {"dim", s.dim()}};
}

inline NormStats norm_stats_from_json(const nlohmann::json& j) {
  const auto m = j.at("means").get<std::vector<double>>();
  const auto d = j.at("sds").get<std::vector<double>>();
  const int dim = j.at("dim").get<int>();
  if (static_cast<int>(m.size()) != dim || static_cast<int>(d.size()) != dim)
    throw std::runtime_error("norm stats: array length does not match dim");
  NormStats s;
  s.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), dim);
  s.sd = Eigen::Map<const Eigen::VectorXd>(d.data(), dim);
  for (double v : d)
    if (!(v > 0)) throw std::runtime_error("norm stats: non-positive sd");
  return s;
}

inline void save_norm_stats(const NormStats& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << to_json(s).dump() << '\n';
}

inline NormStats load_norm_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return norm_stats_from_json(nlohmann::json::parse(in));
}

// Reward accumulation between two decision points.

enum class DiscountScheme { fixed, variable };

inline DiscountScheme parse_discount(const std::string& s) {
  if (s == "fixed") return DiscountScheme::fixed;
  if (s == "variable") return DiscountScheme::variable;
  throw std::invalid_argument("discount must be 'fixed' or 'variable'");
}
inline const char* to_string(DiscountScheme s) { return s == DiscountScheme::fixed ? "fixed" : "variable"; }

struct DiscountSpec {
  DiscountScheme scheme = DiscountScheme::fixed;
  double gamma_step = 0.95;
  double gamma_infra = 0.95;  // only used by the variable scheme
};

/// Plain sum of the infra-step rewards; the step target adds gamma * V(next).
inline double accumulate_fixed(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("a transition spans at least one infra-step");
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum;
}

struct VariableReturn {
  double discounted_sum = 0.0;
  double bootstrap = 1.0;  // gamma_infra^N
};

inline VariableReturn accumulate_variable(std::span<const double> rewards, double gamma_infra) {
  if (rewards.empty()) throw std::invalid_argument("a transition spans at least one infra-step");
  if (!(gamma_infra > 0 && gamma_infra <= 1)) throw std::invalid_argument("gamma_infra must lie in (0,1]");
  VariableReturn out;
  for (double r : rewards) {
    out.discounted_sum += out.bootstrap * r;
    out.bootstrap *= gamma_infra;
  }
  return out;
}

/// Per-infra-step factor whose avg_n-th power equals gamma_step.
inline double calibrate_gamma_infra(double gamma_step, double avg_n) {
  if (!(gamma_step > 0 && gamma_step < 1)) throw std::invalid_argument("gamma_step must lie in (0,1)");
  if (!(avg_n >= 1)) throw std::invalid_argument("average infra-steps per decision must be >= 1");
  return std::pow(gamma_step, 1.0 / avg_n);
}

}  // namespace egcs
