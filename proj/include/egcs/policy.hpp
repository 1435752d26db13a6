#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "egcs/agent.hpp"
#include "egcs/dispatch.hpp"
#include "egcs/features.hpp"

namespace egcs {

enum class AgentKind { etd, random, first, closest, sector, least_busy, rl_combinatorial, rl_branching };

inline AgentKind parse_agent(const std::string& s) {
  if (s == "etd") return AgentKind::etd;
  if (s == "random") return AgentKind::random;
  if (s == "first") return AgentKind::first;
  if (s == "closest") return AgentKind::closest;
  if (s == "sector") return AgentKind::sector;
  if (s == "least_busy") return AgentKind::least_busy;
  if (s == "rl_combinatorial") return AgentKind::rl_combinatorial;
  if (s == "rl_branching") return AgentKind::rl_branching;
  throw std::invalid_argument("unknown agent kind '" + s + "'");
}

inline const char* to_string(AgentKind k) {
  switch (k) {
    case AgentKind::etd: return "etd";
    case AgentKind::random: return "random";
    case AgentKind::first: return "first";
    case AgentKind::closest: return "closest";
    case AgentKind::sector: return "sector";
    case AgentKind::least_busy: return "least_busy";
    case AgentKind::rl_combinatorial: return "rl_combinatorial";
    case AgentKind::rl_branching: return "rl_branching";
  }
  return "?";
}

inline bool is_rl(AgentKind k) { return k == AgentKind::rl_combinatorial || k == AgentKind::rl_branching; }

/// Shared decision interface: rule-based dispatchers and the learned agent.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  /// Per-episode reseed so every episode is reproducible on its own.
  virtual void reseed(std::uint64_t seed) = 0;
  virtual std::vector<int> decide(const World& world, CallId call) = 0;
};

class EtdPolicy final : public Policy {
 public:
  std::string name() const override { return "etd"; }
  void reseed(std::uint64_t) override {}
  std::vector<int> decide(const World& world, CallId call) override { return etd_dispatch(world, call).elevators; }
};

class SimplePolicy final : public Policy {
 public:
  explicit SimplePolicy(SimpleKind kind, std::uint64_t seed = 0) : kind_(kind), rng_(seed) {}
  std::string name() const override { return to_string(kind_); }
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }
  std::vector<int> decide(const World& world, CallId call) override {
    return simple_dispatch(kind_, world, call, rng_).elevators;
  }

 private:
  SimpleKind kind_;
  Rng rng_;
};

/// Frozen network acting epsilon-greedily on normalised features.
class QPolicy final : public Policy {
 public:
  QPolicy(QNetwork net, NormStats norm, int max_subset, double epsilon = 0.0, std::uint64_t seed = 0)
      : net_(std::move(net)), norm_(std::move(norm)), epsilon_(epsilon), rng_(seed) {
    if (net_.topology().input_dim != norm_.dim()) throw std::invalid_argument("norm stats do not match network input");
    if (net_.topology().head == HeadKind::combinatorial) {
      codec_.emplace(net_.topology().num_branches, max_subset);
      if (codec_->size() != net_.topology().num_actions) throw std::invalid_argument("codec does not match network head");
    }
  }

  std::string name() const override {
    return net_.topology().head == HeadKind::combinatorial ? "rl_combinatorial" : "rl_branching";
  }
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }

  std::vector<int> decide(const World& world, CallId call) override {
    const int a = select_action(net_, norm_.normalize(featurize(world, call).flatten()), epsilon_, rng_);
    if (codec_) return codec_->decode(a);
    return subset_from_mask(static_cast<unsigned>(a), net_.topology().num_branches);
  }

  const QNetwork& network() const { return net_; }
  void set_epsilon(double e) { epsilon_ = e; }

 private:
  QNetwork net_;
  NormStats norm_;
  std::optional<ActionCodec> codec_;
  double epsilon_;
  Rng rng_;
};

inline std::unique_ptr<Policy> make_rule_policy(AgentKind k, std::uint64_t seed = 0) {
  switch (k) {
    case AgentKind::etd: return std::make_unique<EtdPolicy>();
    case AgentKind::random: return std::make_unique<SimplePolicy>(SimpleKind::random, seed);
    case AgentKind::first: return std::make_unique<SimplePolicy>(SimpleKind::first, seed);
    case AgentKind::closest: return std::make_unique<SimplePolicy>(SimpleKind::closest, seed);
    case AgentKind::sector: return std::make_unique<SimplePolicy>(SimpleKind::sector, seed);
    case AgentKind::least_busy: return std::make_unique<SimplePolicy>(SimpleKind::least_busy, seed);
    default: throw std::invalid_argument("not a rule-based agent: " + std::string(to_string(k)));
  }
}

}  // namespace egcs
