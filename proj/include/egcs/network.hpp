#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "egcs/rng.hpp"

namespace egcs {

enum class HeadKind { combinatorial, branching };

inline HeadKind parse_head(const std::string& s) {
  if (s == "combinatorial") return HeadKind::combinatorial;
  if (s == "branching") return HeadKind::branching;
  throw std::invalid_argument("head must be 'combinatorial' or 'branching'");
}
inline const char* to_string(HeadKind h) { return h == HeadKind::combinatorial ? "combinatorial" : "branching"; }

struct Topology {
  int input_dim = 28;
  std::vector<int> hidden{128, 512, 256};
  HeadKind head = HeadKind::combinatorial;
  int num_actions = 41;     // combinatorial
  int num_branches = 6;     // branching
  int branch_hidden = 128;  // branching
  int branch_actions = 2;   // branching

  int output_dim() const { return head == HeadKind::combinatorial ? num_actions : num_branches * branch_actions; }

  void validate() const {
    if (input_dim < 1) throw std::invalid_argument("input_dim must be positive");
    if (hidden.empty()) throw std::invalid_argument("need at least one hidden layer");
    for (int h : hidden)
      if (h < 1) throw std::invalid_argument("hidden widths must be positive");
    if (head == HeadKind::combinatorial && num_actions < 1) throw std::invalid_argument("num_actions must be positive");
    if (head == HeadKind::branching && (num_branches < 1 || branch_hidden < 1 || branch_actions < 1))
      throw std::invalid_argument("branching head sizes must be positive");
  }

  bool operator==(const Topology&) const = default;
};

inline nlohmann::json to_json(const Topology& t) {
  return {{"input_dim", t.input_dim},         {"hidden", t.hidden},
          {"head", to_string(t.head)},        {"num_actions", t.num_actions},
          {"num_branches", t.num_branches},   {"branch_hidden", t.branch_hidden},
          {"branch_actions", t.branch_actions}};
}

inline Topology topology_from_json(const nlohmann::json& j) {
  Topology t;
  t.input_dim = j.at("input_dim").get<int>();
  t.hidden = j.at("hidden").get<std::vector<int>>();
  t.head = parse_head(j.at("head").get<std::string>());
  t.num_actions = j.at("num_actions").get<int>();
  t.num_branches = j.at("num_branches").get<int>();
  t.branch_hidden = j.at("branch_hidden").get<int>();
  t.branch_actions = j.at("branch_actions").get<int>();
  t.validate();
  return t;
}

/// Dense layer view into the flat parameter vector. W is out x in, column-major.
struct LayerRef {
  Eigen::Index w = 0;
  Eigen::Index b = 0;
  int out = 0;
  int in = 0;
};

/// Dueling Q-network: ReLU trunk, then either one advantage stream over the
/// encoded subsets or one small advantage stream per elevator. All parameters
/// live in one vector so optimiser state and checkpoints are plain arrays.
class QNetwork {
 public:
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;

  struct Cache {
    Matrix input;
    std::vector<Matrix> pre;   // trunk pre-activations
    std::vector<Matrix> post;  // trunk activations
    std::vector<Matrix> branch_pre;
    std::vector<Matrix> branch_post;
  };

  QNetwork() : QNetwork(Topology{}) {}

  explicit QNetwork(const Topology& t) : topo_(t) {
    topo_.validate();
    Eigen::Index off = 0;
    auto add = [&](int out, int in) {
      LayerRef r{off, off + static_cast<Eigen::Index>(out) * in, out, in};
      off = r.b + out;
      return r;
    };
    int width = t.input_dim;
    for (int h : t.hidden) {
      trunk_.push_back(add(h, width));
      width = h;
    }
    value_ = add(1, width);
    if (t.head == HeadKind::combinatorial) {
      adv_ = add(t.num_actions, width);
    } else {
      for (int b = 0; b < t.num_branches; ++b) {
        branch1_.push_back(add(t.branch_hidden, width));
        branch2_.push_back(add(t.branch_actions, t.branch_hidden));
      }
    }
    params_ = Vector::Zero(off);
  }

  const Topology& topology() const { return topo_; }
  Eigen::Index num_params() const { return params_.size(); }
  const Vector& params() const { return params_; }
  Vector& params() { return params_; }

  void set_params(const Vector& p) {
    if (p.size() != params_.size()) throw std::invalid_argument("parameter count mismatch");
    params_ = p;
  }

  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init(Rng& rng) {
    auto fill = [&](const LayerRef& l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index i = l.w; i < l.b + l.out; ++i) params_[i] = u(rng);
    };
    for (const auto& l : trunk_) fill(l);
    fill(value_);
    if (topo_.head == HeadKind::combinatorial) {
      fill(adv_);
    } else {
      for (std::size_t b = 0; b < branch1_.size(); ++b) {
        fill(branch1_[b]);
        fill(branch2_[b]);
      }
    }
  }

  /// X is input_dim x batch; returns output_dim x batch. For the branching
  /// head rows are branch-major: row b*branch_actions + j.
  Matrix forward(const Matrix& X) const {
    Cache c;
    return forward(X, c);
  }

  Vector forward_one(const Vector& x) const { return forward(Matrix(x)).col(0); }

  Matrix forward(const Matrix& X, Cache& c) const {
    if (X.rows() != topo_.input_dim) throw std::invalid_argument("input has wrong dimension");
    c.input = X;
    c.pre.clear();
    c.post.clear();
    c.branch_pre.clear();
    c.branch_post.clear();
    const Matrix* h = &c.input;
    for (const auto& l : trunk_) {
      c.pre.push_back((W(l) * *h).colwise() + B(l));
      c.post.push_back(c.pre.back().cwiseMax(0.0));
      h = &c.post.back();
    }
    const Eigen::RowVectorXd v = (W(value_) * *h).colwise() + B(value_);
    if (topo_.head == HeadKind::combinatorial) {
      Matrix a = (W(adv_) * *h).colwise() + B(adv_);
      const Eigen::RowVectorXd mean = a.colwise().mean();
      a.rowwise() += v - mean;
      return a;
    }
    const int k = topo_.branch_actions;
    Matrix q(topo_.output_dim(), X.cols());
    for (std::size_t b = 0; b < branch1_.size(); ++b) {
      c.branch_pre.push_back((W(branch1_[b]) * *h).colwise() + B(branch1_[b]));
      c.branch_post.push_back(c.branch_pre.back().cwiseMax(0.0));
      Matrix a = (W(branch2_[b]) * c.branch_post.back()).colwise() + B(branch2_[b]);
      const Eigen::RowVectorXd mean = a.colwise().mean();
      a.rowwise() += v - mean;
      q.middleRows(static_cast<Eigen::Index>(b) * k, k) = a;
    }
    return q;
  }

  /// Gradient of sum(dQ .* Q) with respect to the parameters.
  Vector backward(const Cache& c, const Matrix& dQ) const {
    Vector g = Vector::Zero(params_.size());
    const Matrix& h = c.post.empty() ? c.input : c.post.back();
    Matrix dh;
    Eigen::RowVectorXd dv;
    if (topo_.head == HeadKind::combinatorial) {
      dv = dQ.colwise().sum();
      const Matrix da = dQ.rowwise() - dQ.colwise().mean();
      accumulate(g, adv_, da, h);
      dh = W(adv_).transpose() * da;
    } else {
      const int k = topo_.branch_actions;
      dv = Eigen::RowVectorXd::Zero(dQ.cols());
      dh = Matrix::Zero(h.rows(), h.cols());
      for (std::size_t b = 0; b < branch1_.size(); ++b) {
        const auto dqb = dQ.middleRows(static_cast<Eigen::Index>(b) * k, k);
        dv += dqb.colwise().sum();
        const Matrix da = dqb.rowwise() - dqb.colwise().mean();
        accumulate(g, branch2_[b], da, c.branch_post[b]);
        const Matrix dz =
            (W(branch2_[b]).transpose() * da).cwiseProduct((c.branch_pre[b].array() > 0.0).cast<double>().matrix());
        accumulate(g, branch1_[b], dz, h);
        dh += W(branch1_[b]).transpose() * dz;
      }
    }
    accumulate(g, value_, dv, h);
    dh += W(value_).transpose() * dv;
    for (std::size_t i = trunk_.size(); i-- > 0;) {
      const Matrix dz = dh.cwiseProduct((c.pre[i].array() > 0.0).cast<double>().matrix());
      accumulate(g, trunk_[i], dz, i == 0 ? c.input : c.post[i - 1]);
      if (i > 0) dh = W(trunk_[i]).transpose() * dz;
    }
    return g;
  }

 private:
  Eigen::Map<const Matrix> W(const LayerRef& l) const { return {params_.data() + l.w, l.out, l.in}; }
  Eigen::Map<const Vector> B(const LayerRef& l) const { return {params_.data() + l.b, l.out}; }

  static void accumulate(Vector& g, const LayerRef& l, const Matrix& dz, const Matrix& in) {
    Eigen::Map<Matrix>(g.data() + l.w, l.out, l.in) += dz * in.transpose();
    Eigen::Map<Vector>(g.data() + l.b, l.out) += dz.rowwise().sum();
  }

  Topology topo_;
  std::vector<LayerRef> trunk_;
  LayerRef value_;
  LayerRef adv_;
  std::vector<LayerRef> branch1_;
  std::vector<LayerRef> branch2_;
  Vector params_;
};

inline double huber(double x, double delta = 1.0) {
  const double a = std::abs(x);
  return a <= delta ? 0.5 * x * x : delta * (a - 0.5 * delta);
}
inline double huber_grad(double x, double delta = 1.0) { return std::clamp(x, -delta, delta); }

}  // namespace egcs
