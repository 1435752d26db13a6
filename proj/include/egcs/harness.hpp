#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "egcs/agent.hpp"
#include "egcs/features.hpp"
#include "egcs/policy.hpp"
#include "egcs/sim.hpp"
#include "egcs/traffic.hpp"

namespace egcs {

struct SeedConfig {
  std::uint64_t train = 1001;
  std::uint64_t validation = 2002;
  std::uint64_t test = 3003;
};

struct RunConfig {
  BuildingConfig building;
  std::optional<std::string> profile_path;  // default profile when absent
  double scale = 1.0;
  SeedConfig seeds;
  int train_days = 10;

  AgentKind agent = AgentKind::etd;
  int max_subset = 3;
  std::optional<std::string> checkpoint;  // RL evaluation

  DiscountSpec discount;
  bool auto_gamma_infra = true;  // calibrate from the mean decision gap

  std::vector<int> hidden{128, 512, 256};
  int branch_hidden = 128;
  double lr = 5e-4;
  double weight_decay = 1e-2;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 10000;
  std::size_t learn_start = 10000;
  long learn_interval = 10;
  long target_sync = 300;
  double eps_start = 1.0;
  double eps_end = 0.1;

  long training_steps = 200000;
  long eval_every = 10000;
  int validation_episodes = 30;
  int test_episodes = 20;
  long norm_samples = 100000;

  std::uint64_t master_seed = 1;
  std::string output_dir;  // nothing is written when empty
  bool events = false;

  void validate() const {
    building.validate();
    if (seeds.train == seeds.validation || seeds.train == seeds.test || seeds.validation == seeds.test)
      throw std::invalid_argument("train, validation and test seeds must be pairwise distinct");
    if (!(scale > 0)) throw std::invalid_argument("scale must be positive");
    if (train_days < 1) throw std::invalid_argument("train_days must be positive");
    if (max_subset < 1 || max_subset > building.num_elevators) throw std::invalid_argument("max_subset out of range");
    if (validation_episodes < 1 || test_episodes < 1) throw std::invalid_argument("episode counts must be positive");
    if (is_rl(agent)) {
      if (training_steps <= 0) throw std::invalid_argument("training steps must be positive for RL agents");
      if (eval_every <= 0) throw std::invalid_argument("eval_every must be positive");
      if (training_steps / eval_every < 1) throw std::invalid_argument("configuration yields zero evaluation points");
      if (norm_samples < 2) throw std::invalid_argument("norm_samples must be at least 2");
    }
  }

  TrafficProfile profile() const {
    TrafficProfile p = profile_path ? load_profile(*profile_path) : default_profile();
    p.num_landings = building.num_landings;
    return scale == 1.0 ? p : scale_profile(p, scale);
  }

  AgentConfig agent_config() const {
    AgentConfig a;
    const HeadKind head = agent == AgentKind::rl_branching ? HeadKind::branching : HeadKind::combinatorial;
    a.topology = default_topology(head, building.num_elevators, max_subset);
    a.topology.hidden = hidden;
    a.topology.branch_hidden = branch_hidden;
    a.max_subset = max_subset;
    a.discount = discount;
    a.lr = lr;
    a.adamw.weight_decay = weight_decay;
    a.batch_size = batch_size;
    a.buffer_capacity = buffer_capacity;
    a.learn_start = learn_start;
    a.learn_interval = learn_interval;
    a.target_sync = target_sync;
    a.total_steps = training_steps;
    a.eps_start = eps_start;
    a.eps_end = eps_end;
    return a;
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["building"] = c.building;
  j["traffic"] = {{"profile", c.profile_path ? nlohmann::json(*c.profile_path) : nlohmann::json()},
                  {"scale", c.scale},
                  {"train_seed", c.seeds.train},
                  {"validation_seed", c.seeds.validation},
                  {"test_seed", c.seeds.test},
                  {"train_days", c.train_days}};
  j["agent"] = {{"kind", to_string(c.agent)},
                {"max_subset", c.max_subset},
                {"checkpoint", c.checkpoint ? nlohmann::json(*c.checkpoint) : nlohmann::json()},
                {"hidden", c.hidden},
                {"branch_hidden", c.branch_hidden}};
  j["discount"] = {{"scheme", to_string(c.discount.scheme)},
                   {"gamma_step", c.discount.gamma_step},
                   {"gamma_infra", c.auto_gamma_infra ? nlohmann::json() : nlohmann::json(c.discount.gamma_infra)}};
  j["training"] = {{"steps", c.training_steps},         {"eval_every", c.eval_every},
                   {"validation_episodes", c.validation_episodes}, {"norm_samples", c.norm_samples},
                   {"lr", c.lr},                        {"weight_decay", c.weight_decay},
                   {"batch_size", c.batch_size},        {"buffer_capacity", c.buffer_capacity},
                   {"learn_start", c.learn_start},      {"learn_interval", c.learn_interval},
                   {"target_sync", c.target_sync},      {"eps_start", c.eps_start},
                   {"eps_end", c.eps_end}};
  j["evaluation"] = {{"test_episodes", c.test_episodes}, {"events", c.events}};
  j["seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("building")) c.building = j.at("building").get<BuildingConfig>();
  if (j.contains("traffic")) {
    const auto& t = j.at("traffic");
    if (t.contains("profile") && !t.at("profile").is_null()) c.profile_path = t.at("profile").get<std::string>();
    c.scale = t.value("scale", c.scale);
    c.seeds.train = t.value("train_seed", c.seeds.train);
    c.seeds.validation = t.value("validation_seed", c.seeds.validation);
    c.seeds.test = t.value("test_seed", c.seeds.test);
    c.train_days = t.value("train_days", c.train_days);
  }
  if (j.contains("agent")) {
    const auto& a = j.at("agent");
    if (a.contains("kind")) c.agent = parse_agent(a.at("kind").get<std::string>());
    c.max_subset = a.value("max_subset", c.max_subset);
    if (a.contains("checkpoint") && !a.at("checkpoint").is_null()) c.checkpoint = a.at("checkpoint").get<std::string>();
    c.hidden = a.value("hidden", c.hidden);
    c.branch_hidden = a.value("branch_hidden", c.branch_hidden);
  }
  if (j.contains("discount")) {
    const auto& d = j.at("discount");
    if (d.contains("scheme")) c.discount.scheme = parse_discount(d.at("scheme").get<std::string>());
    c.discount.gamma_step = d.value("gamma_step", c.discount.gamma_step);
    if (d.contains("gamma_infra") && !d.at("gamma_infra").is_null()) {
      c.discount.gamma_infra = d.at("gamma_infra").get<double>();
      c.auto_gamma_infra = false;
    }
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    c.training_steps = t.value("steps", c.training_steps);
    c.eval_every = t.value("eval_every", c.eval_every);
    c.validation_episodes = t.value("validation_episodes", c.validation_episodes);
    c.norm_samples = t.value("norm_samples", c.norm_samples);
    c.lr = t.value("lr", c.lr);
    c.weight_decay = t.value("weight_decay", c.weight_decay);
    c.batch_size = t.value("batch_size", c.batch_size);
    c.buffer_capacity = t.value("buffer_capacity", c.buffer_capacity);
    c.learn_start = t.value("learn_start", c.learn_start);
    c.learn_interval = t.value("learn_interval", c.learn_interval);
    c.target_sync = t.value("target_sync", c.target_sync);
    c.eps_start = t.value("eps_start", c.eps_start);
    c.eps_end = t.value("eps_end", c.eps_end);
  }
  if (j.contains("evaluation")) {
    const auto& e = j.at("evaluation");
    c.test_episodes = e.value("test_episodes", c.test_episodes);
    c.events = e.value("events", c.events);
  }
  c.master_seed = j.value("seed", c.master_seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  try {
    return run_config_from_json(nlohmann::json::parse(in, nullptr, true, true));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Episodes and metrics

struct EpisodeMetrics {
  double total_reward = 0.0;
  double avg_journey_time_s = 0.0;  // arrival -> alight
  double avg_floor_wait_s = 0.0;    // arrival -> board
  double energy_proxy = 0.0;        // magnitude of the movement penalty
  double avg_elevators_per_call = 0.0;
  std::array<double, kHours> elevators_per_call_by_hour{};
  long decisions = 0;
  long passengers = 0;
  long infra_steps = 0;
  RewardLedger ledger;
};

inline EpisodeMetrics run_episode(const BuildingConfig& building, const TrafficTrace& trace, Policy& policy,
                                  const RewardWeights& weights = {}, EventSink sink = {}) {
  World w(building, trace, weights);
  if (sink) w.set_event_sink(std::move(sink));
  EpisodeMetrics m;
  while (true) {
    const auto dp = w.run_until_next_decision();
    if (dp.terminal || !dp.call) break;
    const auto subset = policy.decide(w, *dp.call);
    try {
      w.apply_dispatch(*dp.call, subset);
    } catch (const std::exception& e) {
      throw std::runtime_error("policy '" + policy.name() + "' produced an invalid dispatch at t=" +
                               std::to_string(w.now()) + "s: " + e.what());
    }
    ++m.decisions;
  }
  m.ledger = w.ledger();
  m.total_reward = m.ledger.total();
  m.energy_proxy = -m.ledger.value(RewardComponent::moving);
  m.infra_steps = w.step();
  m.passengers = static_cast<long>(w.passengers_created());
  double journey = 0.0;
  double wait = 0.0;
  long done = 0;
  for (const auto& p : w.passengers()) {
    if (!p.alighted_time_s || !p.boarded_time_s) continue;
    journey += *p.alighted_time_s - p.arrival_time_s;
    wait += *p.boarded_time_s - p.arrival_time_s;
    ++done;
  }
  if (done > 0) {
    m.avg_journey_time_s = journey / static_cast<double>(done);
    m.avg_floor_wait_s = wait / static_cast<double>(done);
  }
  std::array<double, kHours> sent{};
  std::array<long, kHours> prompts{};
  long total_sent = 0;
  for (const auto& d : w.dispatch_log()) {
    const auto h = static_cast<std::size_t>(std::clamp(static_cast<int>(d.t_s / 3600.0), 0, kHours - 1));
    sent[h] += d.elevators_sent;
    ++prompts[h];
    total_sent += d.elevators_sent;
  }
  for (std::size_t h = 0; h < sent.size(); ++h)
    m.elevators_per_call_by_hour[h] = prompts[h] > 0 ? sent[h] / static_cast<double>(prompts[h]) : 0.0;
  if (!w.dispatch_log().empty())
    m.avg_elevators_per_call = static_cast<double>(total_sent) / static_cast<double>(w.dispatch_log().size());
  return m;
}

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single run
  double min = 0.0;
  double max = 0.0;
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  if (s.min == s.max) {
    s.mean = s.min;
    return s;
  }
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"total_reward",           "avg_journey_time_s", "avg_floor_wait_s",
                                              "energy_proxy",           "avg_elevators_per_call", "decisions",
                                              "passengers"};
  return names;
}

inline double metric_value(const EpisodeMetrics& m, const std::string& name) {
  if (name == "total_reward") return m.total_reward;
  if (name == "avg_journey_time_s") return m.avg_journey_time_s;
  if (name == "avg_floor_wait_s") return m.avg_floor_wait_s;
  if (name == "energy_proxy") return m.energy_proxy;
  if (name == "avg_elevators_per_call") return m.avg_elevators_per_call;
  if (name == "decisions") return static_cast<double>(m.decisions);
  if (name == "passengers") return static_cast<double>(m.passengers);
  throw std::invalid_argument("unknown metric " + name);
}

struct MetricsReport {
  std::string agent;
  double scale = 1.0;
  std::vector<EpisodeMetrics> runs;

  Summary stat(const std::string& metric) const {
    std::vector<double> xs;
    for (const auto& r : runs) xs.push_back(metric_value(r, metric));
    return summarize(xs);
  }

  std::array<double, kHours> hourly_elevators_per_call() const {
    std::array<double, kHours> out{};
    for (const auto& r : runs)
      for (std::size_t h = 0; h < out.size(); ++h) out[h] += r.elevators_per_call_by_hour[h];
    if (!runs.empty())
      for (auto& v : out) v /= static_cast<double>(runs.size());
    return out;
  }
};

/// Fixed-precision text so repeated runs produce identical bytes.
inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string metrics_csv_header() {
  std::string h = "agent,scale,runs";
  for (const auto& m : metric_names()) h += "," + m + "_mean," + m + "_sd";
  for (int i = 0; i < kHours; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, ",epc_h%02d", i);
    h += buf;
  }
  return h;
}

inline std::string metrics_csv_row(const MetricsReport& r) {
  std::string row = r.agent + "," + fmt(r.scale) + "," + std::to_string(r.runs.size());
  for (const auto& m : metric_names()) {
    const auto s = r.stat(m);
    row += "," + fmt(s.mean) + "," + fmt(s.sd);
  }
  for (double v : r.hourly_elevators_per_call()) row += "," + fmt(v);
  return row;
}

inline void write_metrics_csv(const std::vector<MetricsReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << metrics_csv_header() << '\n';
  for (const auto& r : reports) out << metrics_csv_row(r) << '\n';
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j{{"agent", r.agent}, {"scale", r.scale}, {"runs", r.runs.size()}};
  for (const auto& m : metric_names()) {
    const auto s = r.stat(m);
    j["metrics"][m] = {{"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}};
  }
  const auto hourly = r.hourly_elevators_per_call();
  j["elevators_per_call_by_hour"] = std::vector<double>(hourly.begin(), hourly.end());
  nlohmann::json per = nlohmann::json::array();
  for (const auto& e : r.runs) {
    nlohmann::json ledger;
    for (auto c : {RewardComponent::wait_floor, RewardComponent::wait_elev, RewardComponent::loading,
                   RewardComponent::arrival, RewardComponent::moving, RewardComponent::elevator_full,
                   RewardComponent::zero_elevators})
      ledger[to_string(c)] = e.ledger.value(c);
    nlohmann::json row{{"ledger", ledger}};
    for (const auto& m : metric_names()) row[m] = metric_value(e, m);
    per.push_back(row);
  }
  j["episodes"] = per;
  return j;
}

inline void write_metrics_json(const std::vector<MetricsReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  out << arr.dump(2) << '\n';
}

/// `count` day traces from independent sub-seeds, cycling the active weekdays.
inline std::vector<TrafficTrace> episode_traces(const TrafficProfile& profile, std::uint64_t seed, int count) {
  if (profile.days.empty()) throw std::invalid_argument("profile has no active days");
  std::vector<TrafficTrace> out;
  for (int i = 0; i < count; ++i)
    out.push_back(generate_trace(profile, derive_seed(seed, static_cast<std::uint64_t>(i)),
                                 profile.days[static_cast<std::size_t>(i) % profile.days.size()]));
  return out;
}

inline MetricsReport evaluate_on(Policy& policy, const BuildingConfig& building, const std::vector<TrafficTrace>& traces,
                                 std::uint64_t policy_seed, double scale = 1.0, EventSink first_episode_sink = {}) {
  MetricsReport r;
  r.agent = policy.name();
  r.scale = scale;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    policy.reseed(derive_seed(policy_seed, i));
    r.runs.push_back(run_episode(building, traces[i], policy, {}, i == 0 ? first_episode_sink : EventSink{}));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Checkpoint plumbing shared by train / eval / compare

inline std::unique_ptr<QPolicy> policy_from_checkpoint(const nlohmann::json& ckpt, double epsilon = 0.0,
                                                       std::uint64_t seed = 0) {
  const auto cfg = agent_config_from_json(ckpt.at("config"));
  QNetwork net(cfg.topology);
  const auto p = ckpt.at("online").get<std::vector<double>>();
  net.set_params(Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
  if (!ckpt.contains("norm_stats")) throw std::runtime_error("checkpoint carries no normalisation statistics");
  auto norm = norm_stats_from_json(ckpt.at("norm_stats"));
  if (ckpt.contains("norm_stats_hash") && ckpt.at("norm_stats_hash").get<std::string>() != norm.hash())
    throw std::runtime_error("checkpoint normalisation hash mismatch");
  return std::make_unique<QPolicy>(std::move(net), std::move(norm), cfg.max_subset, epsilon, seed);
}

inline void check_checkpoint_building(const nlohmann::json& ckpt, const BuildingConfig& b) {
  if (ckpt.contains("building") && !(ckpt.at("building").get<BuildingConfig>() == b))
    throw std::invalid_argument("checkpoint was trained on a different building configuration");
}

inline std::unique_ptr<Policy> make_policy(const RunConfig& cfg, std::optional<nlohmann::json> ckpt = std::nullopt) {
  if (!is_rl(cfg.agent)) return make_rule_policy(cfg.agent, cfg.master_seed);
  if (!ckpt) {
    if (!cfg.checkpoint) throw std::runtime_error("RL evaluation needs a checkpoint");
    ckpt = load_checkpoint(*cfg.checkpoint);
  }
  check_checkpoint_building(*ckpt, cfg.building);
  return policy_from_checkpoint(*ckpt);
}

// ---------------------------------------------------------------------------
// Training

struct CurveRow {
  long step = 0;
  long train_steps = 0;
  double epsilon = 0.0;
  double lr = 0.0;
  double reward = 0.0;
  double reward_sd = 0.0;
  double journey_time_s = 0.0;
  double floor_wait_s = 0.0;
  double energy = 0.0;
  double elevators_per_call = 0.0;
  double loss = 0.0;  // mean over gradient steps since the previous row
};

inline std::string curve_csv_header() {
  return "step,train_steps,epsilon,lr,reward,reward_sd,journey_time_s,floor_wait_s,energy,elevators_per_call,loss";
}

inline std::string curve_csv_row(const CurveRow& r) {
  return std::to_string(r.step) + "," + std::to_string(r.train_steps) + "," + fmt(r.epsilon) + "," + fmt(r.lr) + "," +
         fmt(r.reward) + "," + fmt(r.reward_sd) + "," + fmt(r.journey_time_s) + "," + fmt(r.floor_wait_s) + "," +
         fmt(r.energy) + "," + fmt(r.elevators_per_call) + "," + fmt(r.loss);
}

struct EnvStats {
  NormStats norm;
  double avg_n = 1.0;                  // mean infra-steps per decision
  double decisions_per_pass = 0.0;     // decisions in one pass over the train days
  std::vector<long> decisions_per_day;
};

/// Frozen z-score statistics and decision-gap bookkeeping from a Random
/// dispatcher cycling over the train days.
inline EnvStats measure_env(const BuildingConfig& building, const std::vector<TrafficTrace>& days, long samples,
                            std::uint64_t seed) {
  EnvStats out;
  std::vector<Eigen::VectorXd> states;
  SimplePolicy random(SimpleKind::random, seed);
  long infra = 0;
  long decisions = 0;
  // the first pass always runs to completion so the per-day decision counts
  // are exact; later passes stop once enough states are collected
  for (std::size_t pass = 0; pass == 0 || static_cast<long>(states.size()) < samples; ++pass) {
    bool any = false;
    for (std::size_t d = 0; d < days.size(); ++d) {
      if (pass > 0 && static_cast<long>(states.size()) >= samples) break;
      World w(building, days[d]);
      long day_decisions = 0;
      while (true) {
        const auto dp = w.run_until_next_decision();
        infra += dp.n_infra;
        if (!dp.call) break;
        const bool keep = static_cast<long>(states.size()) < samples;
        if (!keep && pass > 0) break;
        if (keep) states.push_back(featurize(w, *dp.call).flatten());
        w.apply_dispatch(*dp.call, random.decide(w, *dp.call));
        ++decisions;
        ++day_decisions;
        any = true;
      }
      if (pass == 0) out.decisions_per_day.push_back(day_decisions);
    }
    if (!any) throw std::runtime_error("train traces produce no decisions");
  }
  out.norm = fit_norm_stats(states);
  out.avg_n = std::max(1.0, static_cast<double>(infra) / static_cast<double>(decisions));
  for (long d : out.decisions_per_day) out.decisions_per_pass += static_cast<double>(d);
  return out;
}

struct TrainResult {
  nlohmann::json best_checkpoint;
  double best_reward = -std::numeric_limits<double>::infinity();
  long best_step = 0;
  std::vector<CurveRow> curve;
  EnvStats env;
  double gamma_infra = 0.0;
  double visits_per_transition = 0.0;
  double seconds = 0.0;
};

inline CurveRow curve_row_from(const MetricsReport& r) {
  CurveRow row;
  const auto rew = r.stat("total_reward");
  row.reward = rew.mean;
  row.reward_sd = rew.sd;
  row.journey_time_s = r.stat("avg_journey_time_s").mean;
  row.floor_wait_s = r.stat("avg_floor_wait_s").mean;
  row.energy = r.stat("energy_proxy").mean;
  row.elevators_per_call = r.stat("avg_elevators_per_call").mean;
  return row;
}

inline TrainResult train(const RunConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  if (!is_rl(cfg.agent)) throw std::invalid_argument("train needs an RL agent kind");
  const auto t0 = std::chrono::steady_clock::now();
  const auto profile = cfg.profile();
  const auto train_days = episode_traces(profile, cfg.seeds.train, cfg.train_days);
  const auto val_days = episode_traces(profile, cfg.seeds.validation, cfg.validation_episodes);

  TrainResult result;
  result.env = measure_env(cfg.building, train_days, cfg.norm_samples, derive_seed(cfg.master_seed, 0x6e6f726d));
  AgentConfig acfg = cfg.agent_config();
  if (acfg.discount.scheme == DiscountScheme::variable && cfg.auto_gamma_infra)
    acfg.discount.gamma_infra = calibrate_gamma_infra(acfg.discount.gamma_step, result.env.avg_n);
  result.gamma_infra = acfg.discount.gamma_infra;
  result.visits_per_transition = static_cast<double>(cfg.training_steps) / result.env.decisions_per_pass;
  const NormStats& norm = result.env.norm;

  DdqnAgent agent(acfg, derive_seed(cfg.master_seed, 0x6167656e74));
  const std::uint64_t val_policy_seed = derive_seed(cfg.master_seed, 0x76616c);

  auto checkpoint = [&]() {
    auto j = agent.checkpoint(norm);
    j["building"] = cfg.building;
    return j;
  };
  auto validate = [&]() {
    auto pol = policy_from_checkpoint(checkpoint());
    return evaluate_on(*pol, cfg.building, val_days, val_policy_seed, cfg.scale);
  };

  namespace fs = std::filesystem;
  std::ofstream curve_out;
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    curve_out.open(fs::path(cfg.output_dir) / "curve.csv");
    curve_out << curve_csv_header() << '\n';
  }
  if (log)
    *log << "train: " << to_string(cfg.agent) << " max_subset=" << cfg.max_subset << " discount="
         << to_string(acfg.discount.scheme) << " avg_n=" << fmt(result.env.avg_n)
         << " gamma_infra=" << fmt(result.gamma_infra) << " decisions/pass=" << result.env.decisions_per_pass
         << " visits/transition=" << fmt(result.visits_per_transition) << '\n';

  double loss_sum = 0.0;
  long loss_count = 0;
  auto record = [&](long step) {
    const auto report = validate();
    CurveRow row = curve_row_from(report);
    row.step = step;
    row.train_steps = agent.train_steps();
    row.epsilon = agent.epsilon_schedule().at(step);
    row.lr = cosine_lr(acfg.lr, step, acfg.total_steps);
    row.loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    loss_sum = 0.0;
    loss_count = 0;
    result.curve.push_back(row);
    if (curve_out.is_open()) curve_out << curve_csv_row(row) << '\n' << std::flush;
    if (row.reward > result.best_reward) {
      result.best_reward = row.reward;
      result.best_step = step;
      result.best_checkpoint = checkpoint();
      if (!cfg.output_dir.empty()) save_checkpoint((fs::path(cfg.output_dir) / "best.ckpt.json").string(), result.best_checkpoint);
    }
    if (log)
      *log << "  step " << step << " eps=" << fmt(row.epsilon) << " reward=" << fmt(row.reward) << " +- "
           << fmt(row.reward_sd) << " journey=" << fmt(row.journey_time_s) << " epc=" << fmt(row.elevators_per_call)
           << " loss=" << fmt(row.loss) << '\n';
  };

  record(0);
  std::size_t day = 0;
  auto world = std::make_unique<World>(cfg.building, train_days[0]);
  auto dp = world->run_until_next_decision();
  for (long step = 1; step <= cfg.training_steps;) {
    if (!dp.call) {
      day = (day + 1) % train_days.size();
      world = std::make_unique<World>(cfg.building, train_days[day]);
      dp = world->run_until_next_decision();
      continue;
    }
    const CallId call = *dp.call;
    const Eigen::VectorXd s = norm.normalize(featurize(*world, call).flatten());
    const int action = agent.act(s, agent.epsilon());
    world->apply_dispatch(call, agent.to_subset(action));
    dp = world->run_until_next_decision();

    Transition t;
    t.state = s;
    t.action = action;
    t.reward_fixed = accumulate_fixed(dp.rewards);
    const auto vr = accumulate_variable(dp.rewards, acfg.discount.gamma_infra);
    t.reward_variable = vr.discounted_sum;
    t.n_infra = dp.n_infra;
    t.terminal = !dp.call;
    t.next_state = t.terminal ? s : norm.normalize(featurize(*world, *dp.call).flatten());
    if (auto loss = agent.observe(std::move(t))) {
      loss_sum += *loss;
      ++loss_count;
    }
    if (step % cfg.eval_every == 0) record(step);
    ++step;
  }

  if (!cfg.output_dir.empty()) {
    auto final_ckpt = checkpoint();
    save_checkpoint((fs::path(cfg.output_dir) / "final.ckpt.json").string(), final_ckpt);
    save_norm_stats(norm, (fs::path(cfg.output_dir) / "norm_stats.json").string());
    std::ofstream info(fs::path(cfg.output_dir) / "train_info.json");
    info << nlohmann::json{{"avg_infra_steps_per_decision", result.env.avg_n},
                           {"gamma_infra", result.gamma_infra},
                           {"decisions_per_train_day", result.env.decisions_per_day},
                           {"decisions_per_pass", result.env.decisions_per_pass},
                           {"visits_per_transition", result.visits_per_transition},
                           {"best_step", result.best_step},
                           {"best_validation_reward", result.best_reward}}
                .dump(2)
         << '\n';
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation and comparison

inline MetricsReport evaluate(const RunConfig& cfg, std::optional<nlohmann::json> ckpt = std::nullopt) {
  cfg.validate();
  auto policy = make_policy(cfg, std::move(ckpt));
  const auto traces = episode_traces(cfg.profile(), cfg.seeds.test, cfg.test_episodes);
  std::ofstream events;
  EventSink sink;
  if (cfg.events && !cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    events.open(std::filesystem::path(cfg.output_dir) / "events.jsonl");
    sink = [&events](const Event& e) { events << to_json(e).dump() << '\n'; };
  }
  auto report = evaluate_on(*policy, cfg.building, traces, derive_seed(cfg.master_seed, 0x74657374), cfg.scale, sink);
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    write_metrics_csv({report}, (std::filesystem::path(cfg.output_dir) / "metrics.csv").string());
    write_metrics_json({report}, (std::filesystem::path(cfg.output_dir) / "metrics.json").string());
  }
  return report;
}

struct CompareEntry {
  std::string label;
  AgentKind kind = AgentKind::etd;
  std::optional<nlohmann::json> checkpoint;
};

/// Every entry evaluated on the same test traces at each scale.
inline std::vector<MetricsReport> compare(const RunConfig& base, const std::vector<CompareEntry>& entries,
                                          const std::vector<double>& scales) {
  if (entries.size() * scales.size() < 2) throw std::invalid_argument("compare needs at least two runs");
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t k = i + 1; k < entries.size(); ++k)
      if (entries[i].label == entries[k].label) throw std::invalid_argument("duplicate compare label " + entries[i].label);
  std::vector<MetricsReport> out;
  for (double scale : scales) {
    RunConfig cfg = base;
    cfg.scale = scale;
    cfg.output_dir.clear();
    cfg.events = false;
    for (const auto& e : entries) {
      cfg.agent = e.kind;
      auto report = evaluate(cfg, e.checkpoint);
      report.agent = e.label;
      out.push_back(std::move(report));
    }
  }
  if (!base.output_dir.empty()) {
    std::filesystem::create_directories(base.output_dir);
    write_metrics_csv(out, (std::filesystem::path(base.output_dir) / "metrics.csv").string());
    write_metrics_json(out, (std::filesystem::path(base.output_dir) / "metrics.json").string());
  }
  return out;
}

}  // namespace egcs
