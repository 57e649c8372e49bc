#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "aip/eval/eval.hpp"

namespace aip {

double paired_t_test(const std::vector<double>& before, const std::vector<double>& after) {
  if (before.size() != after.size()) fail(ErrorKind::Statistics, "paired samples differ in length");
  if (before.size() < 2) fail(ErrorKind::Statistics, "paired t-test needs at least two pairs");
  const auto n = static_cast<double>(before.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < before.size(); ++k) sum += after[k] - before[k];
  const double mu = sum / n;
  double ss = 0.0;
  for (std::size_t k = 0; k < before.size(); ++k) {
    const double d = after[k] - before[k] - mu;
    ss += d * d;
  }
  const double var = ss / (n - 1.0);
  if (!(var > 0.0)) fail(ErrorKind::Statistics, "differences have zero variance");
  const double t = mu / std::sqrt(var / n);
  const boost::math::students_t dist(n - 1.0);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

}  // namespace aip
