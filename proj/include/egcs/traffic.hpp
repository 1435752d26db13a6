#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "egcs/rng.hpp"

namespace egcs {

inline constexpr int kHours = 24;
using HourlyArray = std::array<double, kHours>;

/// Synthetic daily traffic pattern. Arrivals follow a Poisson process whose
/// rate is constant within each hour.
struct TrafficProfile {
  HourlyArray hourly_rate{};                 // groups per hour
  HourlyArray hourly_up_fraction{};          // P(trip goes up)
  HourlyArray hourly_interfloor_fraction{};  // P(trip avoids the lobby)
  HourlyArray group_size_p{};                // geometric success parameter, mean size 1/p
  double weight_mean_kg = 75.0;
  double weight_sd_kg = 10.0;
  double weight_min_kg = 30.0;
  int lobby_floor = 0;
  int num_landings = 16;
  std::vector<int> days{1, 2, 3, 4, 5};  // 1 = Monday
  double scale = 1.0;                    // cumulative group-size multiplier

  void validate() const {
    if (num_landings < 2) throw std::invalid_argument("profile: num_landings must be >= 2");
    if (lobby_floor < 0 || lobby_floor >= num_landings - 1)
      throw std::invalid_argument("profile: lobby must have a landing above it");
    for (int h = 0; h < kHours; ++h) {
      if (!(hourly_rate[h] >= 0)) throw std::invalid_argument("profile: rates must be >= 0");
      if (!(hourly_up_fraction[h] >= 0 && hourly_up_fraction[h] <= 1))
        throw std::invalid_argument("profile: up fraction must lie in [0,1]");
      if (!(hourly_interfloor_fraction[h] >= 0 && hourly_interfloor_fraction[h] <= 1))
        throw std::invalid_argument("profile: interfloor fraction must lie in [0,1]");
      if (!(group_size_p[h] > 0 && group_size_p[h] <= 1))
        throw std::invalid_argument("profile: group_size_p must lie in (0,1]");
    }
    if (!(weight_sd_kg >= 0) || !(weight_mean_kg > 0))
      throw std::invalid_argument("profile: invalid weight distribution");
    if (days.empty()) throw std::invalid_argument("profile: empty day set");
    for (int d : days)
      if (d < 1 || d > 7) throw std::invalid_argument("profile: day must be 1..7");
  }

  bool active_on(int day) const { return std::find(days.begin(), days.end(), day) != days.end(); }

  double mean_group_size(int hour) const { return 1.0 / group_size_p[static_cast<std::size_t>(hour)]; }
};

/// Office-building day: a sharp morning up-peak, a two-way lunch peak with
/// inter-floor traffic, and a softer evening down-peak. Nights are empty.
inline TrafficProfile default_profile() {
  TrafficProfile p;
  p.hourly_rate = {0, 0, 0, 0, 0, 0, 15, 90, 260, 240, 170, 190,
                   300, 280, 170, 160, 190, 210, 110, 50, 25, 15, 8, 4};
  p.hourly_up_fraction = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9, 0.9, 0.85, 0.8, 0.65, 0.55,
                          0.5, 0.5, 0.45, 0.4, 0.3, 0.25, 0.25, 0.3, 0.3, 0.3, 0.3, 0.3};
  p.hourly_interfloor_fraction = {0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.1, 0.15, 0.3,
                                  0.35, 0.35, 0.3, 0.2, 0.15, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  for (int h = 0; h < kHours; ++h) p.group_size_p[static_cast<std::size_t>(h)] = 0.77;
  for (int h : {8, 9, 12, 13, 17}) p.group_size_p[static_cast<std::size_t>(h)] = 0.55;
  return p;
}

/// Multiplies the mean group size by `factor`; arrival rates are untouched.
inline TrafficProfile scale_profile(const TrafficProfile& profile, double factor) {
  if (!(factor > 0)) throw std::invalid_argument("scale factor must be > 0");
  TrafficProfile out = profile;
  if (factor == 1.0) return out;
  for (auto& p : out.group_size_p) p = std::clamp(p / factor, 1e-9, 1.0);
  out.scale = profile.scale * factor;
  return out;
}

inline void to_json(nlohmann::json& j, const TrafficProfile& p) {
  j = nlohmann::json{{"hourly_rate", p.hourly_rate},
                     {"hourly_up_fraction", p.hourly_up_fraction},
                     {"hourly_interfloor_fraction", p.hourly_interfloor_fraction},
                     {"group_size_p", p.group_size_p},
                     {"weight_mean_kg", p.weight_mean_kg},
                     {"weight_sd_kg", p.weight_sd_kg},
                     {"weight_min_kg", p.weight_min_kg},
                     {"lobby_floor", p.lobby_floor},
                     {"num_landings", p.num_landings},
                     {"days", p.days},
                     {"scale", p.scale}};
}

inline void from_json(const nlohmann::json& j, TrafficProfile& p) {
  TrafficProfile d = default_profile();
  auto hourly = [&](const char* key, HourlyArray fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != kHours)
      throw std::invalid_argument(std::string("profile: '") + key + "' needs 24 entries");
    return a.get<HourlyArray>();
  };
  p.hourly_rate = hourly("hourly_rate", d.hourly_rate);
  p.hourly_up_fraction = hourly("hourly_up_fraction", d.hourly_up_fraction);
  p.hourly_interfloor_fraction = hourly("hourly_interfloor_fraction", d.hourly_interfloor_fraction);
  p.group_size_p = hourly("group_size_p", d.group_size_p);
  p.weight_mean_kg = j.value("weight_mean_kg", d.weight_mean_kg);
  p.weight_sd_kg = j.value("weight_sd_kg", d.weight_sd_kg);
  p.weight_min_kg = j.value("weight_min_kg", d.weight_min_kg);
  p.lobby_floor = j.value("lobby_floor", d.lobby_floor);
  p.num_landings = j.value("num_landings", d.num_landings);
  p.days = j.value("days", d.days);
  p.scale = j.value("scale", d.scale);
}

inline std::string profile_hash(const TrafficProfile& p) {
  return hex64(fnv1a(nlohmann::json(p).dump()));
}

struct ArrivalGroup {
  double t_s = 0.0;
  int origin = 0;
  int destination = 0;
  std::vector<double> weights_kg;

  int size() const { return static_cast<int>(weights_kg.size()); }
  bool operator==(const ArrivalGroup&) const = default;
};

struct TraceMetadata {
  std::uint64_t seed = 0;
  std::string profile_hash;
  double scale_factor = 1.0;
  int day_of_week = 1;
  bool operator==(const TraceMetadata&) const = default;
};

struct TrafficTrace {
  TraceMetadata meta;
  std::vector<ArrivalGroup> groups;

  std::size_t passenger_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.weights_kg.size();
    return n;
  }
  bool operator==(const TrafficTrace&) const = default;
};

namespace detail {

inline std::pair<int, int> draw_trip(const TrafficProfile& p, int hour, Rng& rng) {
  const int top = p.num_landings - 1;
  const int lobby = p.lobby_floor;
  const bool up = std::bernoulli_distribution(p.hourly_up_fraction[static_cast<std::size_t>(hour)])(rng);
  const bool inter =
      std::bernoulli_distribution(p.hourly_interfloor_fraction[static_cast<std::size_t>(hour)])(rng) &&
      top - lobby >= 2;
  int origin = lobby;
  int dest = lobby;
  if (inter) {
    // both ends strictly above the lobby
    int a = std::uniform_int_distribution<int>(lobby + 1, top - 1)(rng);
    int b = std::uniform_int_distribution<int>(a + 1, top)(rng);
    origin = up ? a : b;
    dest = up ? b : a;
  } else {
    int upper = std::uniform_int_distribution<int>(lobby + 1, top)(rng);
    origin = up ? lobby : upper;
    dest = up ? upper : lobby;
  }
  return {origin, dest};
}

}  // namespace detail

inline TrafficTrace generate_trace(const TrafficProfile& profile, std::uint64_t seed, int day_of_week) {
  profile.validate();
  if (day_of_week < 1 || day_of_week > 7) throw std::invalid_argument("day_of_week must be 1..7");
  TrafficTrace trace;
  trace.meta = {seed, profile_hash(profile), profile.scale, day_of_week};
  if (!profile.active_on(day_of_week)) return trace;

  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(day_of_week)));
  for (int h = 0; h < kHours; ++h) {
    const double rate = profile.hourly_rate[static_cast<std::size_t>(h)];
    if (rate <= 0) continue;
    const int count = std::poisson_distribution<int>(rate)(rng);
    std::vector<double> times(static_cast<std::size_t>(count));
    std::uniform_real_distribution<double> within(0.0, 3600.0);
    for (auto& t : times) t = h * 3600.0 + within(rng);
    std::sort(times.begin(), times.end());
    std::geometric_distribution<int> extra(profile.group_size_p[static_cast<std::size_t>(h)]);
    std::normal_distribution<double> weight(profile.weight_mean_kg, profile.weight_sd_kg);
    for (double t : times) {
      ArrivalGroup g;
      g.t_s = t;
      std::tie(g.origin, g.destination) = detail::draw_trip(profile, h, rng);
      const int size = 1 + extra(rng);
      for (int k = 0; k < size; ++k) {
        double w = weight(rng);
        while (w < profile.weight_min_kg) w = weight(rng);
        g.weights_kg.push_back(w);
      }
      trace.groups.push_back(std::move(g));
    }
  }
  return trace;
}

// JSON Lines: one header record, then one record per arrival group.

inline void save_trace(const TrafficTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  nlohmann::json header{{"seed", trace.meta.seed},
                        {"scale", trace.meta.scale_factor},
                        {"day", trace.meta.day_of_week},
                        {"profile_hash", trace.meta.profile_hash}};
  out << header.dump() << '\n';
  for (const auto& g : trace.groups) {
    nlohmann::json rec{{"t_s", g.t_s}, {"origin", g.origin}, {"dest", g.destination}, {"weights", g.weights_kg}};
    out << rec.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline TrafficTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  TrafficTrace trace;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail("expected an object");
    try {
      if (!have_header) {
        for (const char* k : {"seed", "scale", "day", "profile_hash"})
          if (!j.contains(k)) fail(std::string("header missing '") + k + "'");
        trace.meta.seed = j.at("seed").get<std::uint64_t>();
        trace.meta.scale_factor = j.at("scale").get<double>();
        trace.meta.day_of_week = j.at("day").get<int>();
        trace.meta.profile_hash = j.at("profile_hash").get<std::string>();
        have_header = true;
        continue;
      }
      for (const char* k : {"t_s", "origin", "dest", "weights"})
        if (!j.contains(k)) fail(std::string("record missing '") + k + "'");
      ArrivalGroup g;
      g.t_s = j.at("t_s").get<double>();
      g.origin = j.at("origin").get<int>();
      g.destination = j.at("dest").get<int>();
      g.weights_kg = j.at("weights").get<std::vector<double>>();
      if (g.weights_kg.empty()) fail("group has no passengers");
      for (double w : g.weights_kg)
        if (!(w > 0)) fail("non-positive passenger weight");
      if (g.origin == g.destination) fail("origin equals destination");
      if (g.origin < 0 || g.destination < 0) fail("negative landing");
      if (!trace.groups.empty() && g.t_s < trace.groups.back().t_s) fail("arrival times decrease");
      trace.groups.push_back(std::move(g));
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("bad field type: ") + e.what());
    }
  }
  if (!have_header) throw std::runtime_error(path + ": missing header record");
  return trace;
}

inline void save_profile(const TrafficProfile& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << nlohmann::json(p).dump(2) << '\n';
}

inline TrafficProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  TrafficProfile p = nlohmann::json::parse(in).get<TrafficProfile>();
  p.validate();
  return p;
}

}  // namespace egcs
