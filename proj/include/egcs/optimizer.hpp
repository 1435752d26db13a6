#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace egcs {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

/// Adam with decoupled weight decay (decay applied to the weights before the
/// moment step, as torch.optim.AdamW does).
class AdamW {
 public:
  AdamW() = default;
  AdamW(Eigen::Index n, AdamWConfig cfg = {}) : cfg_(cfg), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("optimizer size mismatch");
    ++t_;
    params *= 1.0 - lr * cfg_.weight_decay;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
  }

  const AdamWConfig& config() const { return cfg_; }
  const Eigen::VectorXd& m() const { return m_; }
  const Eigen::VectorXd& v() const { return v_; }
  long t() const { return t_; }

  void restore(Eigen::VectorXd m, Eigen::VectorXd v, long t) {
    if (m.size() != m_.size() || v.size() != v_.size()) throw std::invalid_argument("optimizer state size mismatch");
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

 private:
  AdamWConfig cfg_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

/// lr(t) = lr0 * (1 + cos(pi * t / T)) / 2, held at 0 past T.
inline double cosine_lr(double lr0, long t, long total) {
  if (total <= 0) return lr0;
  if (t >= total) return 0.0;
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) / static_cast<double>(total)));
}

/// Exploration rate decaying exponentially from `start` towards `end`,
/// reaching end + 0.001 at 80% of training.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.1;
  long total = 1;

  double tau() const { return 0.8 * static_cast<double>(total) / std::log((start - end) / 0.001); }

  double at(long t) const {
    if (start <= end) return end;
    return end + (start - end) * std::exp(-static_cast<double>(t) / tau());
  }
};

}  // namespace egcs
