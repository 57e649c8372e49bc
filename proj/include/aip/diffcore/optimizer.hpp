#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace aip {

enum class OptimizerKind { PlainGradient, AdaptiveMoment };
enum class Direction { Ascend, Descend };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::PlainGradient;
  double step_size = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double stability = 1e-8;
  std::uint64_t steps = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;

  static OptimizerState plain(double step_size);
  static OptimizerState adam(double step_size);
};

/// Applies one update in place. Adam accumulators are sized lazily on the
/// first step and must keep that size afterwards. Throws an optimization
/// error naming the first non-finite gradient entry.
void optimizer_step(OptimizerState& state, Eigen::Ref<Eigen::VectorXd> vector, const Eigen::VectorXd& gradient,
                    Direction direction);

/// The update optimizer_step would add to the vector, without touching it.
Eigen::VectorXd optimizer_delta(OptimizerState& state, const Eigen::VectorXd& gradient, Direction direction);

}  // namespace aip
