#include "aip/diffcore/optimizer.hpp"

#include <cmath>
#include <string>

#include "aip/error.hpp"

namespace aip {

OptimizerState OptimizerState::plain(double step_size) {
  OptimizerState s;
  s.kind = OptimizerKind::PlainGradient;
  s.step_size = step_size;
  return s;
}

OptimizerState OptimizerState::adam(double step_size) {
  OptimizerState s;
  s.kind = OptimizerKind::AdaptiveMoment;
  s.step_size = step_size;
  return s;
}

Eigen::VectorXd optimizer_delta(OptimizerState& state, const Eigen::VectorXd& gradient, Direction direction) {
  if (!(state.step_size > 0.0)) fail(ErrorKind::Optimization, "step size must be positive");
  for (Eigen::Index k = 0; k < gradient.size(); ++k)
    if (!std::isfinite(gradient[k])) fail(ErrorKind::Optimization, "non-finite gradient at index " + std::to_string(k));
  const double sign = direction == Direction::Ascend ? 1.0 : -1.0;

  ++state.steps;
  if (state.kind == OptimizerKind::PlainGradient) return sign * state.step_size * gradient;

  if (state.first_moment.size() == 0) {
    state.first_moment = Eigen::VectorXd::Zero(gradient.size());
    state.second_moment = Eigen::VectorXd::Zero(gradient.size());
  }
  if (state.first_moment.size() != gradient.size()) {
    --state.steps;
    fail(ErrorKind::Dimension, "gradient size changed between optimizer steps");
  }
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * gradient;
  state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * gradient.cwiseAbs2();
  const double t = static_cast<double>(state.steps);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  return sign * state.step_size *
         ((state.first_moment / c1).array() / ((state.second_moment / c2).array().sqrt() + state.stability)).matrix();
}

void optimizer_step(OptimizerState& state, Eigen::Ref<Eigen::VectorXd> vector, const Eigen::VectorXd& gradient,
                    Direction direction) {
  if (vector.size() != gradient.size())
    fail(ErrorKind::Dimension, "vector has " + std::to_string(vector.size()) + " entries, gradient has " +
                                   std::to_string(gradient.size()));
  vector += optimizer_delta(state, gradient, direction);
}

}  // namespace aip
