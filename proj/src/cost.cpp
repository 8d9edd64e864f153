#include <cmath>
#include <numbers>

#include "hkembed/errors.hpp"
#include "hkembed/transport.hpp"

namespace hkembed {

CostMatrix squared_euclidean_cost(const GridMeasure& a, const GridMeasure& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("cost matrix of an empty measure");
  CostMatrix c(a.size(), b.size());
  const auto pa = a.coords();
  const auto pb = b.coords();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t j = 0; j < pb.size(); ++j) c(i, j) = squared_distance(pa[i], pb[j]);
  }
  return c;
}

double hk_cost_value(double distance, double kappa) {
  if (distance == 0.0) return 0.0;
  const double scaled = distance / kappa;
  if (scaled >= std::numbers::pi / 2) return kInfiniteCost;
  return -2.0 * std::log(std::cos(scaled));
}

CostMatrix hk_cost(const GridMeasure& a, const GridMeasure& b, double kappa) {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  if (a.empty() || b.empty()) throw InvalidArgument("cost matrix of an empty measure");
  CostMatrix c(a.size(), b.size());
  const auto pa = a.coords();
  const auto pb = b.coords();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t j = 0; j < pb.size(); ++j) {
      c(i, j) = hk_cost_value(std::sqrt(squared_distance(pa[i], pb[j])), kappa);
    }
  }
  return c;
}

double mean_finite_cost(const CostMatrix& cost) {
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index k = 0; k < cost.size(); ++k) {
    const double v = cost.data()[k];
    if (std::isfinite(v)) {
      sum += v;
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace hkembed
