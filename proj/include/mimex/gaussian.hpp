#pragma once

#include <cmath>
#include <span>

#include "mimex/tensor.hpp"

namespace mimex {

inline constexpr double kLogTwoPi = 1.8378770664093453;

// Diagonal-Gaussian log density, one scalar per row:
//   sum_d [ -0.5*((x-mean)/sigma)^2 - log(sigma) - 0.5*log(2*pi) ]
// mean and x are (d) or (n, d); log_std is (d).
inline Tensor gaussian_log_prob(const Tensor& mean, const Tensor& log_std, const Tensor& x) {
  mean.require_same_shape(x, "gaussian_log_prob");
  if (log_std.rank() != 1 || log_std.size() != mean.row_width()) {
    throw ShapeError("gaussian_log_prob: log_std shape " +
                     Tensor::shape_string(log_std.shape()) + " incompatible with mean " +
                     Tensor::shape_string(mean.shape()));
  }
  require_finite(mean, "gaussian_log_prob: mean");
  require_finite(log_std, "gaussian_log_prob: log_std");
  require_finite(x, "gaussian_log_prob: x");

  std::size_t n = mean.rows();
  std::size_t d = mean.row_width();
  Tensor out({n});
  for (std::size_t r = 0; r < n; ++r) {
    std::span<const double> m = mean.row(r);
    std::span<const double> xv = x.row(r);
    double lp = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double inv_sigma = std::exp(-log_std[i]);
      double z = (xv[i] - m[i]) * inv_sigma;
      lp += -0.5 * z * z - log_std[i] - 0.5 * kLogTwoPi;
    }
    out[r] = lp;
  }
  return out;
}

inline double gaussian_log_prob_row(std::span<const double> mean, std::span<const double> log_std,
                                    std::span<const double> x) {
  double lp = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    double inv_sigma = std::exp(-log_std[i]);
    double z = (x[i] - mean[i]) * inv_sigma;
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLogTwoPi;
  }
  return lp;
}

// Entropy of a diagonal Gaussian: sum_d [log(sigma_d) + 0.5*(1 + log 2*pi)].
inline double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += ls + 0.5 * (1.0 + kLogTwoPi);
  return h;
}

}  // namespace mimex
