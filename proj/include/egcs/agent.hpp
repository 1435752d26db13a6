#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "egcs/action_codec.hpp"
#include "egcs/features.hpp"
#include "egcs/network.hpp"
#include "egcs/optimizer.hpp"
#include "egcs/replay.hpp"
#include "egcs/rng.hpp"

namespace egcs {

struct Transition {
  Eigen::VectorXd state;  // normalised
  int action = 0;         // codec index, or elevator bit mask for the branching head
  double reward_fixed = 0.0;
  double reward_variable = 0.0;
  long n_infra = 1;
  Eigen::VectorXd next_state;
  bool terminal = false;
};

inline double bootstrap_factor(const DiscountSpec& d, long n_infra) {
  return d.scheme == DiscountScheme::fixed ? d.gamma_step : std::pow(d.gamma_infra, static_cast<double>(n_infra));
}

inline double reward_for(const DiscountSpec& d, const Transition& t) {
  return d.scheme == DiscountScheme::fixed ? t.reward_fixed : t.reward_variable;
}

/// Lowest index wins ties.
template <class V>
int argmax_lowest(const V& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Greedy / epsilon-greedy action. Combinatorial: an index; branching: a mask
/// with bit b set when branch b prefers action 1.
inline int select_action(const QNetwork& net, const Eigen::VectorXd& state, double epsilon, Rng& rng) {
  const auto& t = net.topology();
  const bool explore = epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon;
  if (t.head == HeadKind::combinatorial) {
    if (explore) return std::uniform_int_distribution<int>(0, t.num_actions - 1)(rng);
    return argmax_lowest(net.forward_one(state));
  }
  int mask = 0;
  if (explore) {
    for (int b = 0; b < t.num_branches; ++b)
      if (std::uniform_int_distribution<int>(0, 1)(rng)) mask |= 1 << b;
    return mask;
  }
  const Eigen::VectorXd q = net.forward_one(state);
  for (int b = 0; b < t.num_branches; ++b)
    if (argmax_lowest(q.segment(b * t.branch_actions, t.branch_actions)) == 1) mask |= 1 << b;
  return mask;
}

/// Branch b's chosen sub-action inside a branching action mask.
inline int branch_action(int mask, int b) { return (mask >> b) & 1; }

/// Bootstrapped targets, rows = heads (1 for combinatorial, one per branch).
inline Eigen::MatrixXd ddqn_target(const std::vector<const Transition*>& batch, const QNetwork& online,
                                   const QNetwork& target, const DiscountSpec& d) {
  if (!(online.topology() == target.topology())) throw std::invalid_argument("online and target topologies differ");
  const auto& t = online.topology();
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd next(t.input_dim, n);
  for (Eigen::Index i = 0; i < n; ++i) next.col(i) = batch[static_cast<std::size_t>(i)]->next_state;
  const Eigen::MatrixXd qo = online.forward(next);
  const Eigen::MatrixXd qt = target.forward(next);
  const int heads = t.head == HeadKind::combinatorial ? 1 : t.num_branches;
  const int k = t.head == HeadKind::combinatorial ? t.num_actions : t.branch_actions;
  Eigen::MatrixXd y(heads, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& tr = *batch[static_cast<std::size_t>(i)];
    const double r = reward_for(d, tr);
    const double g = bootstrap_factor(d, tr.n_infra);
    for (int h = 0; h < heads; ++h) {
      if (tr.terminal) {
        y(h, i) = r;
        continue;
      }
      const int a = argmax_lowest(qo.col(i).segment(h * k, k));
      y(h, i) = r + g * qt(h * k + a, i);
    }
  }
  return y;
}

struct LossAndGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Huber(1) loss between Q(s,a) and y, averaged over batch and heads.
inline LossAndGrad huber_loss_and_grad(const QNetwork& net, const std::vector<const Transition*>& batch,
                                       const Eigen::MatrixXd& y) {
  const auto& t = net.topology();
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd x(t.input_dim, n);
  for (Eigen::Index i = 0; i < n; ++i) x.col(i) = batch[static_cast<std::size_t>(i)]->state;
  QNetwork::Cache cache;
  const Eigen::MatrixXd q = net.forward(x, cache);
  const int heads = static_cast<int>(y.rows());
  const double scale = 1.0 / (static_cast<double>(n) * heads);
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  LossAndGrad out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int action = batch[static_cast<std::size_t>(i)]->action;
    for (int h = 0; h < heads; ++h) {
      const int row = t.head == HeadKind::combinatorial ? action : h * t.branch_actions + branch_action(action, h);
      const double delta = q(row, i) - y(h, i);
      out.loss += huber(delta) * scale;
      dq(row, i) += huber_grad(delta) * scale;
    }
  }
  out.grad = net.backward(cache, dq);
  return out;
}

struct AgentConfig {
  Topology topology;
  int max_subset = 3;  // combinatorial only
  DiscountSpec discount;
  double lr = 5e-4;
  AdamWConfig adamw;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 10000;
  std::size_t learn_start = 10000;
  long learn_interval = 10;
  long target_sync = 300;  // in train steps
  long total_steps = 200000;
  double eps_start = 1.0;
  double eps_end = 0.1;
};

inline nlohmann::json to_json(const AgentConfig& c) {
  return {{"topology", to_json(c.topology)},
          {"max_subset", c.max_subset},
          {"discount", {{"scheme", to_string(c.discount.scheme)}, {"gamma_step", c.discount.gamma_step}, {"gamma_infra", c.discount.gamma_infra}}},
          {"lr", c.lr},
          {"adamw", {{"beta1", c.adamw.beta1}, {"beta2", c.adamw.beta2}, {"eps", c.adamw.eps}, {"weight_decay", c.adamw.weight_decay}}},
          {"batch_size", c.batch_size},
          {"buffer_capacity", c.buffer_capacity},
          {"learn_start", c.learn_start},
          {"learn_interval", c.learn_interval},
          {"target_sync", c.target_sync},
          {"total_steps", c.total_steps},
          {"eps_start", c.eps_start},
          {"eps_end", c.eps_end}};
}

inline AgentConfig agent_config_from_json(const nlohmann::json& j) {
  AgentConfig c;
  c.topology = topology_from_json(j.at("topology"));
  c.max_subset = j.at("max_subset").get<int>();
  const auto& d = j.at("discount");
  c.discount.scheme = parse_discount(d.at("scheme").get<std::string>());
  c.discount.gamma_step = d.at("gamma_step").get<double>();
  c.discount.gamma_infra = d.at("gamma_infra").get<double>();
  c.lr = j.at("lr").get<double>();
  const auto& a = j.at("adamw");
  c.adamw = {a.at("beta1").get<double>(), a.at("beta2").get<double>(), a.at("eps").get<double>(),
             a.at("weight_decay").get<double>()};
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
  c.learn_start = j.at("learn_start").get<std::size_t>();
  c.learn_interval = j.at("learn_interval").get<long>();
  c.target_sync = j.at("target_sync").get<long>();
  c.total_steps = j.at("total_steps").get<long>();
  c.eps_start = j.at("eps_start").get<double>();
  c.eps_end = j.at("eps_end").get<double>();
  return c;
}

/// Topology for a fleet of `elevators` cars with the stock hidden widths.
inline Topology default_topology(HeadKind head, int elevators, int max_subset) {
  Topology t;
  t.input_dim = 4 + 4 * elevators;
  t.head = head;
  t.num_branches = elevators;
  t.num_actions = head == HeadKind::combinatorial ? ActionCodec(elevators, max_subset).size() : 0;
  return t;
}

class DdqnAgent {
 public:
  DdqnAgent(const AgentConfig& cfg, std::uint64_t seed)
      : cfg_(cfg),
        online_(cfg.topology),
        target_(cfg.topology),
        opt_(online_.num_params(), cfg.adamw),
        buffer_(cfg.buffer_capacity),
        rng_(seed) {
    if (cfg.batch_size == 0 || cfg.learn_interval < 1 || cfg.target_sync < 1 || cfg.total_steps < 1)
      throw std::invalid_argument("agent: batch, intervals and total_steps must be positive");
    if (cfg.learn_start < cfg.batch_size) throw std::invalid_argument("agent: learn_start must be >= batch_size");
    if (cfg.topology.head == HeadKind::combinatorial) {
      codec_.emplace(cfg.topology.num_branches, cfg.max_subset);
      if (codec_->size() != cfg.topology.num_actions) throw std::invalid_argument("agent: num_actions does not match codec");
    }
    online_.init(rng_);
    sync_target();
  }

  const AgentConfig& config() const { return cfg_; }
  const QNetwork& online() const { return online_; }
  const QNetwork& target() const { return target_; }
  QNetwork& online() { return online_; }
  const AdamW& optimizer() const { return opt_; }
  const ReplayBuffer<Transition>& buffer() const { return buffer_; }
  Rng& rng() { return rng_; }
  long env_steps() const { return env_steps_; }
  long train_steps() const { return train_steps_; }

  EpsilonSchedule epsilon_schedule() const { return {cfg_.eps_start, cfg_.eps_end, cfg_.total_steps}; }
  double epsilon() const { return epsilon_schedule().at(env_steps_); }
  double learning_rate() const { return cosine_lr(cfg_.lr, env_steps_, cfg_.total_steps); }

  int act(const Eigen::VectorXd& state, double epsilon) { return select_action(online_, state, epsilon, rng_); }

  std::vector<int> to_subset(int action) const {
    if (codec_) return codec_->decode(action);
    return subset_from_mask(static_cast<unsigned>(action), cfg_.topology.num_branches);
  }

  /// Store one decision-step transition; learns every learn_interval steps
  /// once the buffer holds learn_start entries. Returns the loss when a
  /// gradient step happened.
  std::optional<double> observe(Transition t) {
    if (t.n_infra < 1) throw std::invalid_argument("transition must span at least one infra-step");
    buffer_.push(std::move(t));
    ++env_steps_;
    if (env_steps_ % cfg_.learn_interval != 0 || buffer_.size() < cfg_.learn_start) return std::nullopt;
    return train_step();
  }

  double train_step() {
    if (buffer_.size() < std::max(cfg_.learn_start, cfg_.batch_size)) return 0.0;
    const auto idx = buffer_.sample_indices(cfg_.batch_size, rng_);
    std::vector<const Transition*> batch;
    for (auto i : idx) batch.push_back(&buffer_[i]);
    const Eigen::MatrixXd y = ddqn_target(batch, online_, target_, cfg_.discount);
    auto lg = huber_loss_and_grad(online_, batch, y);
    if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) throw std::runtime_error(non_finite_report(lg));
    opt_.step(online_.params(), lg.grad, learning_rate());
    ++train_steps_;
    if (train_steps_ % cfg_.target_sync == 0) sync_target();
    return lg.loss;
  }

  void sync_target() { target_.set_params(online_.params()); }

  /// Weights, optimiser and RNG state. The replay buffer is large, so it is
  /// only included when asked for (needed to resume training bit-exactly).
  nlohmann::json checkpoint(const std::optional<NormStats>& norm = std::nullopt, bool with_replay = false) const {
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json j = {{"format", "egcs-ddqn"},
                        {"version", 1},
                        {"config", to_json(cfg_)},
                        {"online", vec(online_.params())},
                        {"target", vec(target_.params())},
                        {"adam", {{"m", vec(opt_.m())}, {"v", vec(opt_.v())}, {"t", opt_.t()}}},
                        {"rng", rng_state(rng_)},
                        {"env_steps", env_steps_},
                        {"train_steps", train_steps_}};
    if (norm) {
      j["norm_stats"] = to_json(*norm);
      j["norm_stats_hash"] = norm->hash();
    }
    if (with_replay) {
      nlohmann::json items = nlohmann::json::array();
      for (const auto& t : buffer_.raw())
        items.push_back({{"s", vec(t.state)}, {"a", t.action}, {"rf", t.reward_fixed}, {"rv", t.reward_variable},
                         {"n", t.n_infra}, {"s2", vec(t.next_state)}, {"done", t.terminal}});
      j["replay"] = {{"head", buffer_.head()}, {"items", std::move(items)}};
    }
    return j;
  }

  static DdqnAgent from_checkpoint(const nlohmann::json& j, std::uint64_t seed = 0) {
    if (j.value("format", "") != "egcs-ddqn") throw std::runtime_error("not a DDQN checkpoint");
    if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported checkpoint version");
    DdqnAgent a(agent_config_from_json(j.at("config")), seed);
    auto vec = [](const nlohmann::json& arr) {
      const auto v = arr.get<std::vector<double>>();
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    a.online_.set_params(vec(j.at("online")));
    a.target_.set_params(vec(j.at("target")));
    const auto& adam = j.at("adam");
    a.opt_.restore(vec(adam.at("m")), vec(adam.at("v")), adam.at("t").get<long>());
    restore_rng(a.rng_, j.at("rng").get<std::string>());
    a.env_steps_ = j.at("env_steps").get<long>();
    a.train_steps_ = j.at("train_steps").get<long>();
    if (j.contains("replay")) {
      std::vector<Transition> items;
      for (const auto& it : j["replay"].at("items")) {
        Transition t;
        t.state = vec(it.at("s"));
        t.action = it.at("a").get<int>();
        t.reward_fixed = it.at("rf").get<double>();
        t.reward_variable = it.at("rv").get<double>();
        t.n_infra = it.at("n").get<long>();
        t.next_state = vec(it.at("s2"));
        t.terminal = it.at("done").get<bool>();
        items.push_back(std::move(t));
      }
      a.buffer_.restore(std::move(items), j["replay"].at("head").get<std::size_t>());
    }
    return a;
  }

 private:
  std::string non_finite_report(const LossAndGrad& lg) const {
    std::ostringstream os;
    os << "non-finite loss at train step " << train_steps_ << " (env step " << env_steps_ << "): loss=" << lg.loss
       << " |grad|=" << lg.grad.norm() << " |params|=" << online_.params().norm() << " lr=" << learning_rate();
    return os.str();
  }

  AgentConfig cfg_;
  QNetwork online_;
  QNetwork target_;
  AdamW opt_;
  ReplayBuffer<Transition> buffer_;
  std::optional<ActionCodec> codec_;
  Rng rng_;
  long env_steps_ = 0;
  long train_steps_ = 0;
};

inline void save_checkpoint(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump() << '\n';
}

inline nlohmann::json load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing checkpoint: " + path);
  return nlohmann::json::parse(in);
}

}  // namespace egcs
