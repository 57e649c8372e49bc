#include "aip/attacks/attacks.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "aip/recommenders/dvbpr.hpp"
#include "aip/recommenders/simrank.hpp"
#include "aip/recommenders/vbpr.hpp"

namespace aip {

namespace {

// Objective over the embedding; fills d(objective)/d(embedding).
using FeatureObjective = std::function<double(const Eigen::VectorXd& feature, Eigen::VectorXd& gradient)>;

constexpr int kMaxHalvings = 3;

double evaluate(const FeatureExtractor& fx, const FeatureObjective& objective, const Image& x, Eigen::VectorXd* pixel_grad) {
  const Eigen::VectorXd f = fx.forward(x);
  Eigen::VectorXd df;
  const double value = objective(f, df);
  if (pixel_grad) *pixel_grad = fx.input_gradient(x, df);
  return value;
}

// Projected ascent around `original` with backtracking: a step that lowers
// the objective is halved up to kMaxHalvings times and dropped if it still
// does, so the trace never decreases.
AttackResult projected_ascent(const FeatureExtractor& fx, const Image& image, const AttackConfig& cfg,
                              const std::function<FeatureObjective(int iteration)>& objective_for, bool record_negated) {
  const auto start = std::chrono::steady_clock::now();
  const Image original = quantize(image);
  Image x = original;
  OptimizerState opt = cfg.optimizer == OptimizerKind::AdaptiveMoment ? OptimizerState::adam(std::max(cfg.step_size, 1e-300))
                                                                       : OptimizerState::plain(std::max(cfg.step_size, 1e-300));
  AttackResult result;
  {
    const auto objective = objective_for(0);
    const double value = evaluate(fx, objective, x, nullptr);
    if (!std::isfinite(value)) fail(ErrorKind::Attack, "non-finite objective at iteration 0");
    result.trace.push_back(record_negated ? -value : value);
  }
  for (int k = 1; k <= cfg.iterations; ++k) {
    const auto objective = objective_for(k);
    Eigen::VectorXd grad;
    const double current = evaluate(fx, objective, x, &grad);
    if (!std::isfinite(current)) fail(ErrorKind::Attack, "non-finite objective at iteration " + std::to_string(k));
    double accepted = current;
    if (cfg.step_size > 0.0) {
      Eigen::VectorXd delta = optimizer_delta(opt, grad, Direction::Ascend);
      for (int h = 0; h <= kMaxHalvings; ++h, delta *= 0.5) {
        Image candidate = project_and_clip(original, Image(x.shape(), x.pixels() + delta), cfg.epsilon);
        const double value = evaluate(fx, objective, candidate, nullptr);
        if (std::isfinite(value) && value >= current) {
          x = std::move(candidate);
          accepted = value;
          break;
        }
      }
    }
    result.trace.push_back(record_negated ? -accepted : accepted);
  }
  result.image = quantize(x);
  result.linf = linf(result.image, original);
  result.linf_levels = linf_levels(result.image, original);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<int> all_users(int n) {
  std::vector<int> users(static_cast<std::size_t>(n));
  std::iota(users.begin(), users.end(), 0);
  return users;
}

FeatureObjective insa_objective(const VisualRanker& ranker, const std::vector<int>& users) {
  switch (ranker.kind()) {
    case RankerKind::SimRank: {
      const auto& m = static_cast<const SimRankModel&>(ranker);
      // sum_u -(1/n_u) sum_j ||f - f_j||^2, gradient sum_u -2 (f - c_u)
      Eigen::VectorXd centroid_sum = Eigen::VectorXd::Zero(m.extractor().output_dim());
      double constant = 0.0;
      int counted = 0;
      for (int u : users) {
        const auto& profile = m.profile(u);
        if (profile.empty()) continue;
        Eigen::VectorXd c = Eigen::VectorXd::Zero(centroid_sum.size());
        double sq = 0.0;
        for (int j : profile) {
          c += m.item_features().row(j).transpose();
          sq += m.item_features().row(j).squaredNorm();
        }
        const double n = static_cast<double>(profile.size());
        centroid_sum += c / n;
        constant += sq / n;
        ++counted;
      }
      return [centroid_sum, constant, counted](const Eigen::VectorXd& f, Eigen::VectorXd& g) {
        g = -2.0 * (counted * f - centroid_sum);
        return -(counted * f.squaredNorm() - 2.0 * f.dot(centroid_sum) + constant);
      };
    }
    case RankerKind::Vbpr: {
      const auto& m = static_cast<const VbprModel&>(ranker);
      Eigen::VectorXd theta_sum = Eigen::VectorXd::Zero(m.factors());
      for (int u : users) theta_sum += m.user_visual().row(u).transpose();
      const Eigen::VectorXd direction = m.projection().transpose() * theta_sum;
      return [direction](const Eigen::VectorXd& f, Eigen::VectorXd& g) {
        g = direction;
        return direction.dot(f);
      };
    }
    case RankerKind::Dvbpr: {
      const auto& m = static_cast<const DvbprModel&>(ranker);
      Eigen::MatrixXd theta(static_cast<Eigen::Index>(users.size()), m.user_visual().cols());
      for (std::size_t k = 0; k < users.size(); ++k) theta.row(static_cast<Eigen::Index>(k)) = m.user_visual().row(users[k]);
      // log sum_u exp(s_u) with the largest exponent factored out; its gradient
      // is the softmax-weighted theta, a positive rescaling of d/df sum exp(s_u).
      return [theta](const Eigen::VectorXd& f, Eigen::VectorXd& g) {
        const Eigen::VectorXd s = theta * f;
        const double top = s.maxCoeff();
        const Eigen::VectorXd w = (s.array() - top).exp().matrix();
        const double total = w.sum();
        g = theta.transpose() * (w / total);
        return top + std::log(total);
      };
    }
  }
  fail(ErrorKind::Attack, "unsupported ranker");
}

}  // namespace

AttackResult insa(const VisualRanker& ranker, const Image& image, const AttackConfig& cfg) {
  validate_attack_config(cfg);
  if (cfg.kind != AttackKind::Insa) fail(ErrorKind::Config, "insa called with a " + to_string(cfg.kind) + " config");
  const auto everyone = all_users(ranker.num_users());
  const bool batched = cfg.user_batch > 0 && cfg.user_batch < ranker.num_users();
  std::mt19937_64 rng(cfg.seed);
  const FeatureObjective full = insa_objective(ranker, everyone);
  return projected_ascent(
      ranker.extractor(), image, cfg,
      [&](int iteration) -> FeatureObjective {
        if (!batched || iteration == 0) return full;
        auto users = everyone;
        std::shuffle(users.begin(), users.end(), rng);
        users.resize(static_cast<std::size_t>(cfg.user_batch));
        return insa_objective(ranker, users);
      },
      false);
}

AttackResult expa(const FeatureExtractor& extractor, const Image& image, const Image& hook, const AttackConfig& cfg) {
  validate_attack_config(cfg);
  if (cfg.kind != AttackKind::Expa) fail(ErrorKind::Config, "expa called with a " + to_string(cfg.kind) + " config");
  const Eigen::VectorXd target = extractor.forward(hook);
  const FeatureObjective negative_distance = [target](const Eigen::VectorXd& f, Eigen::VectorXd& g) {
    const Eigen::VectorXd d = f - target;
    const double norm = d.norm();
    g = norm > 0.0 ? Eigen::VectorXd(-d / norm) : Eigen::VectorXd::Zero(d.size());
    return -norm;
  };
  return projected_ascent(extractor, image, cfg, [&](int) { return negative_distance; }, true);
}

}  // namespace aip
