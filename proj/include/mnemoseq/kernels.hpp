#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mnemoseq/matrix.hpp"

namespace mnemoseq {

enum class Activation { kSigmoid, kTanh };

template <typename Scalar>
Scalar sigmoid_scalar(Scalar v) {
  // split on sign to avoid exp overflow for large |v|
  if (v >= Scalar(0)) {
    Scalar e = std::exp(-v);
    return Scalar(1) / (Scalar(1) + e);
  }
  Scalar e = std::exp(v);
  return e / (Scalar(1) + e);
}

// Elementwise sigmoid / tanh. Rejects non-finite input.
template <typename Scalar>
Mat<Scalar> activation_apply(const Mat<Scalar>& x, Activation kind) {
  require_finite(x, "activation_apply");
  Mat<Scalar> out(x.rows(), x.cols());
  if (kind == Activation::kSigmoid) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      out.data()[i] = sigmoid_scalar(x.data()[i]);
  } else {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      out.data()[i] = std::tanh(x.data()[i]);
  }
  return out;
}

template <typename Scalar>
Vec<Scalar> sigmoid_vec(const Vec<Scalar>& x) {
  Vec<Scalar> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = sigmoid_scalar(x[i]);
  return out;
}

template <typename Scalar>
Vec<Scalar> tanh_vec(const Vec<Scalar>& x) {
  Vec<Scalar> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

// Numerically stable softmax (max subtraction). Empty input is an error.
template <typename Scalar>
Vec<Scalar> softmax(const Vec<Scalar>& scores) {
  if (scores.size() == 0) throw std::invalid_argument("softmax: empty input");
  require_finite(scores, "softmax");
  Scalar m = scores.maxCoeff();
  Vec<Scalar> out = (scores.array() - m).exp();
  Scalar z = out.sum();
  out /= z;
  return out;
}

template <typename Scalar>
Vec<Scalar> log_softmax(const Vec<Scalar>& scores) {
  if (scores.size() == 0) throw std::invalid_argument("log_softmax: empty input");
  require_finite(scores, "log_softmax");
  Scalar m = scores.maxCoeff();
  Scalar lse = m + std::log((scores.array() - m).exp().sum());
  return scores.array() - lse;
}

// Max over consecutive pairs: out[k] = max(in[2k], in[2k+1]). Input length
// must be even. `pick`, when given, records the winning offset (0/1) of each
// pair so the backward pass can route gradients.
template <typename Scalar>
Vec<Scalar> maxout_pairs(const Vec<Scalar>& pre, std::vector<int>* pick = nullptr) {
  if (pre.size() % 2 != 0)
    throw std::invalid_argument("maxout_pairs: input length must be even");
  Vec<Scalar> out(pre.size() / 2);
  if (pick) pick->assign(static_cast<std::size_t>(out.size()), 0);
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    Scalar a = pre[2 * k], b = pre[2 * k + 1];
    int w = (b > a) ? 1 : 0;  // ties go to the first element
    out[k] = w ? b : a;
    if (pick) (*pick)[static_cast<std::size_t>(k)] = w;
  }
  return out;
}

// Central-difference gradient of a scalar function of a matrix, one entry at
// a time: (f(x+eps) - f(x-eps)) / (2 eps). The reference oracle every
// analytic backward pass in this library is validated against.
inline Mat<double> numeric_gradient(const std::function<double(const Mat<double>&)>& f,
                                    const Mat<double>& x, double epsilon) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("numeric_gradient: epsilon must be positive");
  Mat<double> grad(x.rows(), x.cols());
  Mat<double> probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = probe(i, j);
      probe(i, j) = saved + epsilon;
      const double up = f(probe);
      probe(i, j) = saved - epsilon;
      const double down = f(probe);
      probe(i, j) = saved;
      grad(i, j) = (up - down) / (2.0 * epsilon);
    }
  }
  return grad;
}

// Relative error with an absolute floor so near-zero pairs compare cleanly:
// |a-n| / max(|a|, |n|, floor).
inline double rel_error(double a, double n, double floor_ = 1e-6) {
  double denom = std::max({std::fabs(a), std::fabs(n), floor_});
  return std::fabs(a - n) / denom;
}

inline double max_rel_error(const Mat<double>& a, const Mat<double>& n) {
  if (a.rows() != n.rows() || a.cols() != n.cols())
    throw std::invalid_argument("max_rel_error: shape mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, rel_error(a.data()[i], n.data()[i]));
  return worst;
}

}  // namespace mnemoseq
