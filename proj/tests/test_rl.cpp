#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "egcs/agent.hpp"

using namespace egcs;

namespace {

Topology tiny(HeadKind head, int in = 3, std::vector<int> hidden = {5, 4}, int actions = 7) {
  Topology t;
  t.input_dim = in;
  t.hidden = std::move(hidden);
  t.head = head;
  t.num_actions = actions;
  t.num_branches = 3;
  t.branch_hidden = 4;
  t.branch_actions = 2;
  return t;
}

QNetwork random_net(const Topology& t, std::uint64_t seed) {
  QNetwork n(t);
  Rng rng(seed);
  n.init(rng);
  return n;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Offsets of the output bias blocks, laid out independently of the network:
// trunk (W,b)..., value (W,b), then the advantage stream(s).
Eigen::Index trunk_end(const Topology& t) {
  Eigen::Index off = 0;
  int w = t.input_dim;
  for (int h : t.hidden) {
    off += static_cast<Eigen::Index>(h) * w + h;
    w = h;
  }
  return off + w + 1;
}

Eigen::Index branch_bias(const Topology& t, int b) {
  const int w = t.hidden.back();
  const Eigen::Index block = static_cast<Eigen::Index>(t.branch_hidden) * w + t.branch_hidden +
                             static_cast<Eigen::Index>(t.branch_actions) * t.branch_hidden + t.branch_actions;
  return trunk_end(t) + block * b + block - t.branch_actions;
}

double chi_square(const std::vector<int>& counts) {
  double n = 0.0;
  for (int c : counts) n += c;
  const double e = n / static_cast<double>(counts.size());
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - e) * (c - e) / e;
  return chi2;
}

}  // namespace

TEST(Codec, SizesMatchBinomialSums) {
  EXPECT_EQ(binomial(6, 3), 20);
  EXPECT_EQ(binomial(6, 7), 0);
  EXPECT_EQ(ActionCodec(6, 1).size(), 6);
  EXPECT_EQ(ActionCodec(6, 2).size(), 21);
  EXPECT_EQ(ActionCodec(6, 3).size(), 41);
  EXPECT_EQ(ActionCodec(6, 6).size(), 63);
}

TEST(Codec, BijectionAndOrdering) {
  for (int k = 1; k <= 3; ++k) {
    ActionCodec c(6, k);
    std::set<std::vector<int>> seen;
    for (int i = 0; i < c.size(); ++i) {
      const auto& s = c.decode(i);
      EXPECT_EQ(c.encode(s), i);
      EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
      EXPECT_TRUE(seen.insert(s).second);
      if (i > 0) {
        const auto& p = c.decode(i - 1);
        EXPECT_TRUE(p.size() < s.size() || (p.size() == s.size() && p < s));
      }
    }
  }
}

TEST(Codec, KnownIndices) {
  ActionCodec c(6, 3);
  EXPECT_EQ(c.decode(0), std::vector<int>{0});
  EXPECT_EQ(c.decode(5), std::vector<int>{5});
  EXPECT_EQ(c.decode(6), (std::vector<int>{0, 1}));
  EXPECT_EQ(c.decode(17), (std::vector<int>{2, 5}));
  EXPECT_EQ(c.decode(21), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(c.decode(40), (std::vector<int>{3, 4, 5}));
  EXPECT_EQ(c.encode(std::vector<int>{5, 2}), 17);
}

TEST(Codec, RejectsInvalidSubsets) {
  ActionCodec c(6, 2);
  EXPECT_THROW(c.encode(std::vector<int>{}), std::invalid_argument);
  EXPECT_THROW(c.encode(std::vector<int>{1, 1}), std::invalid_argument);
  EXPECT_THROW(c.encode(std::vector<int>{0, 1, 2}), std::invalid_argument);
  EXPECT_THROW(c.encode(std::vector<int>{6}), std::invalid_argument);
  EXPECT_THROW(c.decode(21), std::out_of_range);
  EXPECT_THROW(c.decode(-1), std::out_of_range);
  EXPECT_THROW(ActionCodec(6, 0), std::invalid_argument);
}

TEST(Codec, MaskRoundTrip) {
  for (unsigned m = 0; m < 64; ++m) EXPECT_EQ(ActionCodec::mask_of(subset_from_mask(m, 6)), m);
  EXPECT_EQ(subset_from_mask(9, 6), (std::vector<int>{0, 3}));
}

TEST(Network, ShapesAndParameterCount) {
  const Topology c = default_topology(HeadKind::combinatorial, 6, 3);
  EXPECT_EQ(c.input_dim, 28);
  EXPECT_EQ(c.num_actions, 41);
  const long trunk = 28 * 128 + 128 + 128 * 512 + 512 + 512 * 256 + 256;
  EXPECT_EQ(QNetwork(c).num_params(), trunk + 257 + 41 * 256 + 41);
  const Topology b = default_topology(HeadKind::branching, 6, 3);
  EXPECT_EQ(b.output_dim(), 12);
  EXPECT_EQ(QNetwork(b).num_params(), trunk + 257 + 6 * (256 * 128 + 128 + 2 * 128 + 2));
  EXPECT_THROW(QNetwork(c).forward_one(Eigen::VectorXd::Zero(27)), std::invalid_argument);
}

TEST(Network, ZeroWeightsGiveZeroQ) {
  for (auto h : {HeadKind::combinatorial, HeadKind::branching}) {
    QNetwork n(tiny(h));
    Rng rng(1);
    const auto q = n.forward(random_matrix(3, 4, rng));
    EXPECT_EQ(q.rows(), n.topology().output_dim());
    EXPECT_TRUE(q.isZero(0.0));
  }
}

TEST(Network, HandComputedForward) {
  Topology t = tiny(HeadKind::combinatorial, 1, {1}, 2);
  QNetwork n(t);
  Eigen::VectorXd p(8);
  p << 2, -1, 3, 0.5, 1, -1, 0, 0.5;  // W1 b1 Wv bv Wa(2) ba(2)
  n.set_params(p);
  EXPECT_TRUE(n.forward_one(Eigen::VectorXd::Constant(1, 1.0)).isApprox(Eigen::Vector2d(4.25, 2.75), 1e-15));
  EXPECT_TRUE(n.forward_one(Eigen::VectorXd::Constant(1, 0.0)).isApprox(Eigen::Vector2d(0.25, 0.75), 1e-15));
}

TEST(Network, AdvantageShiftLeavesQUnchanged) {
  for (auto h : {HeadKind::combinatorial, HeadKind::branching}) {
    const Topology t = tiny(h);
    QNetwork n = random_net(t, 5);
    Rng rng(2);
    const auto x = random_matrix(3, 6, rng);
    const auto q0 = n.forward(x);
    Eigen::VectorXd p = n.params();
    if (h == HeadKind::combinatorial) {
      p.tail(t.num_actions).array() += 3.7;
    } else {
      for (int b = 0; b < t.num_branches; ++b) p.segment(branch_bias(t, b), t.branch_actions).array() += 1.0 + b;
    }
    n.set_params(p);
    EXPECT_TRUE(n.forward(x).isApprox(q0, 1e-12));
  }
}

TEST(Network, MeanAdvantageIsTheValue) {
  // with the advantage stream zeroed, every Q equals V
  const Topology t = tiny(HeadKind::combinatorial);
  QNetwork n = random_net(t, 8);
  Eigen::VectorXd p = n.params();
  const int w = t.hidden.back();
  p.tail(static_cast<Eigen::Index>(t.num_actions) * (w + 1)).setZero();
  n.set_params(p);
  Rng rng(3);
  const auto q = n.forward(random_matrix(3, 5, rng));
  for (Eigen::Index j = 0; j < q.cols(); ++j) EXPECT_NEAR((q.col(j).array() - q(0, j)).abs().maxCoeff(), 0.0, 1e-12);
}

class GradientCheck : public ::testing::TestWithParam<HeadKind> {};

TEST_P(GradientCheck, BackwardMatchesFiniteDifferences) {
  const Topology t = tiny(GetParam());
  QNetwork n = random_net(t, 11);
  Rng rng(4);
  const auto x = random_matrix(3, 5, rng);
  const auto r = random_matrix(t.output_dim(), 5, rng);
  QNetwork::Cache cache;
  n.forward(x, cache);
  const Eigen::VectorXd g = n.backward(cache, r);
  const double h = 1e-6;
  Eigen::VectorXd p = n.params();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    n.set_params(p);
    const double up = n.forward(x).cwiseProduct(r).sum();
    p[i] = keep - h;
    n.set_params(p);
    const double down = n.forward(x).cwiseProduct(r).sum();
    p[i] = keep;
    worst = std::max(worst, std::abs((up - down) / (2 * h) - g[i]));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST_P(GradientCheck, HuberLossGradientMatchesFiniteDifferences) {
  const Topology t = tiny(GetParam());
  QNetwork n = random_net(t, 12);
  Rng rng(6);
  std::vector<Transition> ts(6);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ts[i].state = random_matrix(3, 1, rng).col(0);
    ts[i].action = GetParam() == HeadKind::combinatorial ? static_cast<int>(i % 7) : static_cast<int>(i * 3 % 8);
  }
  std::vector<const Transition*> batch;
  for (const auto& tr : ts) batch.push_back(&tr);
  const int heads = GetParam() == HeadKind::combinatorial ? 1 : t.num_branches;
  // spread targets so both the quadratic and the linear Huber regions occur
  const Eigen::MatrixXd y = 2.0 * random_matrix(heads, 6, rng);
  const auto lg = huber_loss_and_grad(n, batch, y);
  const double h = 1e-6;
  Eigen::VectorXd p = n.params();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    n.set_params(p);
    const double up = huber_loss_and_grad(n, batch, y).loss;
    p[i] = keep - h;
    n.set_params(p);
    const double down = huber_loss_and_grad(n, batch, y).loss;
    p[i] = keep;
    worst = std::max(worst, std::abs((up - down) / (2 * h) - lg.grad[i]));
  }
  EXPECT_LT(worst, 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Heads, GradientCheck, ::testing::Values(HeadKind::combinatorial, HeadKind::branching));

TEST(Huber, ValuesAndSlopes) {
  EXPECT_DOUBLE_EQ(huber(0.5), 0.125);
  EXPECT_DOUBLE_EQ(huber(-3.0), 2.5);
  EXPECT_DOUBLE_EQ(huber(1.0), 0.5);
  EXPECT_DOUBLE_EQ(huber_grad(0.3), 0.3);
  EXPECT_DOUBLE_EQ(huber_grad(-7.0), -1.0);
}

TEST(Loss, ZeroWhenTargetsEqualPredictions) {
  const Topology t = tiny(HeadKind::combinatorial);
  QNetwork n = random_net(t, 2);
  Rng rng(3);
  std::vector<Transition> ts(4);
  Eigen::MatrixXd y(1, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    ts[i].state = random_matrix(3, 1, rng).col(0);
    ts[i].action = static_cast<int>(i);
    y(0, static_cast<Eigen::Index>(i)) = n.forward_one(ts[i].state)[static_cast<Eigen::Index>(i)];
  }
  std::vector<const Transition*> batch{&ts[0], &ts[1], &ts[2], &ts[3]};
  const auto lg = huber_loss_and_grad(n, batch, y);
  EXPECT_NEAR(lg.loss, 0.0, 1e-24);
  EXPECT_NEAR(lg.grad.norm(), 0.0, 1e-12);
}

TEST(Select, GreedyCombinatorialPicksArgmax) {
  const Topology t = default_topology(HeadKind::combinatorial, 6, 3);
  QNetwork n(t);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n.num_params());
  p[p.size() - t.num_actions + 17] = 1.0;
  n.set_params(p);
  Rng rng(1);
  const int a = select_action(n, Eigen::VectorXd::Zero(28), 0.0, rng);
  EXPECT_EQ(a, 17);
  EXPECT_EQ(ActionCodec(6, 3).decode(a), (std::vector<int>{2, 5}));
}

TEST(Select, GreedyTiesGoToLowestIndex) {
  QNetwork n(default_topology(HeadKind::combinatorial, 6, 3));
  Rng rng(1);
  EXPECT_EQ(select_action(n, Eigen::VectorXd::Zero(28), 0.0, rng), 0);
}

TEST(Select, GreedyBranchingSetsPreferredBits) {
  const Topology t = default_topology(HeadKind::branching, 6, 3);
  QNetwork n(t);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n.num_params());
  for (int b : {0, 3}) p[branch_bias(t, b) + 1] = 0.5;
  n.set_params(p);
  Rng rng(1);
  const int mask = select_action(n, Eigen::VectorXd::Zero(28), 0.0, rng);
  EXPECT_EQ(mask, 9);
  EXPECT_EQ(subset_from_mask(static_cast<unsigned>(mask), 6), (std::vector<int>{0, 3}));
  EXPECT_EQ(branch_action(mask, 3), 1);
  EXPECT_EQ(branch_action(mask, 4), 0);
}

TEST(Select, FullExplorationIsUniform) {
  QNetwork c(default_topology(HeadKind::combinatorial, 6, 3));
  QNetwork b(default_topology(HeadKind::branching, 6, 3));
  Rng rng(77);
  std::vector<int> ci(41, 0), bi(64, 0);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(28);
  for (int i = 0; i < 41 * 1000; ++i) ++ci[static_cast<std::size_t>(select_action(c, x, 1.0, rng))];
  for (int i = 0; i < 64 * 1000; ++i) ++bi[static_cast<std::size_t>(select_action(b, x, 1.0, rng))];
  EXPECT_LT(chi_square(ci), 73.40);   // 40 dof, p = 0.001
  EXPECT_LT(chi_square(bi), 103.44);  // 63 dof, p = 0.001
}

TEST(Target, TerminalIsReward) {
  QNetwork n = random_net(tiny(HeadKind::combinatorial), 3);
  Transition tr;
  tr.next_state = Eigen::VectorXd::Ones(3);
  tr.reward_fixed = -3.0;
  tr.terminal = true;
  const auto y = ddqn_target({&tr}, n, n, DiscountSpec{});
  EXPECT_DOUBLE_EQ(y(0, 0), -3.0);
}

TEST(Target, OnlineChoosesTargetEvaluates) {
  // online prefers action 1, target values action 1 at 10 and action 0 at 50
  Topology t = tiny(HeadKind::combinatorial, 1, {1}, 2);
  QNetwork online(t), target(t);
  Eigen::VectorXd po(8), pt(8);
  po << 0, 0, 0, 0, 0, 0, 0, 1;
  pt << 0, 0, 0, 30, 0, 0, 20, -20;
  online.set_params(po);
  target.set_params(pt);
  Transition tr;
  tr.next_state = Eigen::VectorXd::Zero(1);
  tr.reward_fixed = 1.9;
  const auto y = ddqn_target({&tr}, online, target, DiscountSpec{DiscountScheme::fixed, 0.95, 0.95});
  EXPECT_NEAR(y(0, 0), 11.4, 1e-12);
}

TEST(Target, VariableBootstrapUsesInfraSteps) {
  Topology t = tiny(HeadKind::combinatorial, 1, {1}, 2);
  QNetwork n(t);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(8);
  p[3] = 10.0;  // V = 10 everywhere
  n.set_params(p);
  const double gi = calibrate_gamma_infra(0.95, 328.0);
  Transition tr;
  tr.next_state = Eigen::VectorXd::Zero(1);
  tr.reward_fixed = -2.0;
  tr.reward_variable = -1.5;
  tr.n_infra = 328;
  const auto yv = ddqn_target({&tr}, n, n, DiscountSpec{DiscountScheme::variable, 0.95, gi});
  const auto yf = ddqn_target({&tr}, n, n, DiscountSpec{DiscountScheme::fixed, 0.95, gi});
  EXPECT_NEAR(yv(0, 0), -1.5 + 9.5, 1e-9);
  EXPECT_NEAR(yf(0, 0), -2.0 + 9.5, 1e-12);
  tr.n_infra = 1;
  EXPECT_NEAR(ddqn_target({&tr}, n, n, DiscountSpec{DiscountScheme::variable, 0.95, gi})(0, 0), -1.5 + 10 * gi, 1e-12);
}

TEST(Target, BranchingGivesOneTargetPerBranch) {
  const Topology t = tiny(HeadKind::branching);
  QNetwork online = random_net(t, 4), target = random_net(t, 5);
  Transition tr;
  tr.next_state = Eigen::Vector3d(0.3, -1.0, 2.0);
  tr.reward_fixed = 0.5;
  const auto y = ddqn_target({&tr}, online, target, DiscountSpec{});
  ASSERT_EQ(y.rows(), 3);
  const auto qo = online.forward_one(tr.next_state), qt = target.forward_one(tr.next_state);
  for (int b = 0; b < 3; ++b) {
    const int a = qo[2 * b + 1] > qo[2 * b] ? 1 : 0;
    EXPECT_NEAR(y(b, 0), 0.5 + 0.95 * qt[2 * b + a], 1e-12);
  }
}

TEST(AdamW, MatchesScalarReference) {
  AdamWConfig cfg;
  AdamW opt(2, cfg);
  Eigen::VectorXd p(2), g(2);
  p << 1.0, -2.0;
  double m[2] = {0, 0}, v[2] = {0, 0}, q[2] = {1.0, -2.0};
  for (int t = 1; t <= 5; ++t) {
    g << 0.5 * t, -0.1;
    const double lr = 1e-2 / t;
    opt.step(p, g, lr);
    for (int i = 0; i < 2; ++i) {
      q[i] -= lr * cfg.weight_decay * q[i];
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      q[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  EXPECT_NEAR(p[0], q[0], 1e-14);
  EXPECT_NEAR(p[1], q[1], 1e-14);
  EXPECT_EQ(opt.t(), 5);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  AdamW opt(1, AdamWConfig{0.9, 0.999, 1e-8, 0.0});
  Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 1.0), g = Eigen::VectorXd::Constant(1, 0.5);
  opt.step(p, g, 0.1);
  EXPECT_NEAR(p[0], 0.9, 1e-7);
}

TEST(Schedules, CosineEndpointsAndMidpoint) {
  EXPECT_DOUBLE_EQ(cosine_lr(5e-4, 0, 200000), 5e-4);
  EXPECT_NEAR(cosine_lr(5e-4, 100000, 200000), 2.5e-4, 1e-18);
  EXPECT_DOUBLE_EQ(cosine_lr(5e-4, 200000, 200000), 0.0);
  double prev = 1.0;
  for (long t = 0; t <= 200000; t += 1000) {
    const double lr = cosine_lr(5e-4, t, 200000);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(Schedules, EpsilonDecaysWithinBounds) {
  EpsilonSchedule s{1.0, 0.1, 200000};
  EXPECT_DOUBLE_EQ(s.at(0), 1.0);
  EXPECT_NEAR(s.at(160000), 0.101, 1e-12);
  double prev = 2.0;
  for (long t = 0; t <= 400000; t += 500) {
    const double e = s.at(t);
    EXPECT_LT(e, prev);
    EXPECT_GT(e, 0.1);
    EXPECT_LE(e, 1.0);
    prev = e;
  }
}

TEST(Replay, EvictsOldestFirst) {
  ReplayBuffer<int> b(3);
  for (int i = 1; i <= 5; ++i) b.push(i);
  EXPECT_TRUE(b.full());
  EXPECT_EQ(b.size(), 3u);
  EXPECT_EQ(b.ordered(), (std::vector<int>{3, 4, 5}));
  EXPECT_THROW(ReplayBuffer<int>(0), std::invalid_argument);
}

TEST(Replay, SamplesDistinctSlotsUniformly) {
  ReplayBuffer<int> b(20);
  for (int i = 0; i < 20; ++i) b.push(i);
  Rng rng(13);
  std::vector<int> hits(20, 0);
  for (int k = 0; k < 20000; ++k) {
    const auto idx = b.sample_indices(5, rng);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    ASSERT_EQ(uniq.size(), 5u);
    for (auto i : idx) ++hits[i];
  }
  EXPECT_LT(chi_square(hits), 43.82);  // 19 dof, p = 0.001
  EXPECT_THROW(b.sample_indices(21, rng), std::invalid_argument);
}

namespace {

AgentConfig bandit_config(HeadKind head) {
  AgentConfig c;
  c.topology = tiny(head, 3, {16}, 6);
  c.topology.num_branches = 3;
  c.max_subset = 2;
  if (head == HeadKind::combinatorial) c.topology = [&] {
    Topology t = tiny(head, 3, {16}, ActionCodec(3, 2).size());
    t.num_branches = 3;
    return t;
  }();
  c.batch_size = 8;
  c.buffer_capacity = 500;
  c.learn_start = 50;
  c.learn_interval = 1;
  c.target_sync = 5;
  c.total_steps = 3000;
  c.lr = 1e-2;
  return c;
}

}  // namespace

TEST(Agent, LearnsOnlyOnInterval) {
  AgentConfig c = bandit_config(HeadKind::combinatorial);
  c.learn_start = 8;
  c.learn_interval = 10;
  DdqnAgent a(c, 1);
  Transition t;
  t.state = Eigen::VectorXd::Zero(3);
  t.next_state = Eigen::VectorXd::Zero(3);
  for (int i = 1; i <= 35; ++i) {
    const bool learned = a.observe(t).has_value();
    EXPECT_EQ(learned, i % 10 == 0) << i;
  }
  EXPECT_EQ(a.train_steps(), 3);
  EXPECT_EQ(a.env_steps(), 35);
}

TEST(Agent, TargetSyncCountsTrainSteps) {
  AgentConfig c = bandit_config(HeadKind::combinatorial);
  c.learn_start = 8;
  c.target_sync = 2;
  DdqnAgent a(c, 2);
  Transition t;
  t.state = Eigen::VectorXd::Ones(3);
  t.next_state = Eigen::VectorXd::Ones(3);
  t.reward_fixed = 1.0;
  for (int i = 0; i < 8; ++i) a.observe(t);
  EXPECT_EQ(a.train_steps(), 1);
  EXPECT_NE(a.online().params(), a.target().params());
  a.observe(t);
  EXPECT_EQ(a.train_steps(), 2);
  EXPECT_EQ(a.online().params(), a.target().params());
  const Eigen::VectorXd before = a.target().params();
  a.sync_target();
  a.sync_target();
  EXPECT_EQ(a.target().params(), before);
}

TEST(Agent, RejectsBadConfig) {
  AgentConfig c = bandit_config(HeadKind::combinatorial);
  c.learn_start = 2;
  EXPECT_THROW(DdqnAgent(c, 1), std::invalid_argument);
  c = bandit_config(HeadKind::combinatorial);
  c.max_subset = 3;
  EXPECT_THROW(DdqnAgent(c, 1), std::invalid_argument);
}

class Bandit : public ::testing::TestWithParam<HeadKind> {};

TEST_P(Bandit, LearnsTheRewardingAction) {
  // one-step episodes: sending exactly elevators {1} pays 1, anything else 0
  const HeadKind head = GetParam();
  DdqnAgent a(bandit_config(head), 9);
  Rng env(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 3000; ++i) {
    Transition t;
    t.state = Eigen::Vector3d(g(env), g(env), g(env));
    t.action = a.act(t.state, 1.0);
    const auto subset = a.to_subset(t.action);
    t.reward_fixed = subset == std::vector<int>{1} ? 1.0 : 0.0;
    t.next_state = t.state;
    t.terminal = true;
    a.observe(std::move(t));
  }
  int good = 0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd s = Eigen::Vector3d(g(env), g(env), g(env));
    if (a.to_subset(a.act(s, 0.0)) == std::vector<int>{1}) ++good;
  }
  EXPECT_GE(good, 45);
}

INSTANTIATE_TEST_SUITE_P(Heads, Bandit, ::testing::Values(HeadKind::combinatorial, HeadKind::branching));

TEST(Agent, CheckpointRoundTripResumesExactly) {
  AgentConfig c = bandit_config(HeadKind::combinatorial);
  DdqnAgent a(c, 21);
  Transition t;
  t.state = Eigen::Vector3d(0.1, 0.2, 0.3);
  t.next_state = Eigen::Vector3d(0.3, 0.2, 0.1);
  t.reward_fixed = 0.5;
  for (int i = 0; i < 60; ++i) a.observe(t);
  NormStats ns;
  ns.mean = Eigen::Vector3d(1, 2, 3);
  ns.sd = Eigen::Vector3d(1, 1, 2);
  const auto j = a.checkpoint(ns, true);
  EXPECT_EQ(j.at("norm_stats_hash").get<std::string>(), ns.hash());
  const auto path = (std::filesystem::temp_directory_path() / "egcs_ckpt_test.json").string();
  save_checkpoint(path, j);
  DdqnAgent b = DdqnAgent::from_checkpoint(load_checkpoint(path));
  std::filesystem::remove(path);
  EXPECT_EQ(b.online().params(), a.online().params());
  EXPECT_EQ(b.target().params(), a.target().params());
  EXPECT_EQ(b.optimizer().m(), a.optimizer().m());
  EXPECT_EQ(b.optimizer().v(), a.optimizer().v());
  EXPECT_EQ(b.optimizer().t(), a.optimizer().t());
  EXPECT_EQ(b.env_steps(), a.env_steps());
  EXPECT_EQ(b.train_steps(), a.train_steps());
  EXPECT_EQ(b.buffer().size(), a.buffer().size());
  EXPECT_FALSE(a.checkpoint().contains("replay"));
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(a.act(t.state, 0.5), b.act(t.state, 0.5));
    EXPECT_EQ(a.observe(t), b.observe(t));
  }
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), std::runtime_error);
}
