#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "tumoropt/grid.hpp"

namespace testing_support {

using tumoropt::Field;
using tumoropt::Grid;

inline Eigen::VectorXd to_vec(const Field& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) v[static_cast<Eigen::Index>(k)] = f[k];
  return v;
}

inline Field to_field(const Grid& g, const Eigen::VectorXd& v) {
  return Field(g, std::vector<double>(v.data(), v.data() + v.size()));
}

// Dense matrix of a linear map on fields, assembled column by column.
inline Eigen::MatrixXd assemble(const Grid& g, const std::function<Field(const Field&)>& apply) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Field e(g);
    e[static_cast<std::size_t>(j)] = 1.0;
    m.col(j) = to_vec(apply(e));
  }
  return m;
}

// Hand-rolled 1D mirror-ghost Laplacian, independent of the library stencil.
inline Eigen::MatrixXd dense_laplacian_1d(int n, double h) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      l(i, i - 1) += 1.0;
      l(i, i) -= 1.0;
    }
    if (i < n - 1) {
      l(i, i + 1) += 1.0;
      l(i, i) -= 1.0;
    }
  }
  return l / (h * h);
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace testing_support
