#pragma once

#include <span>

#include <Eigen/Dense>

namespace sprayoid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace sprayoid
