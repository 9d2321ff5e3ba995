#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mnemoseq {

// Dense row-major matrix over a configurable scalar; the whole model is
// templated on Scalar so the same code trains in float and gradient-checks
// in double.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Column vector.
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite())
    throw std::domain_error(std::string(what) + ": non-finite value");
}

template <typename Derived>
Mat<double> as_double(const Eigen::MatrixBase<Derived>& m) {
  return m.template cast<double>();
}

}  // namespace mnemoseq
