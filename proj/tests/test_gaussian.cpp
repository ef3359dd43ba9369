#include "mimex/gaussian.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mimex/tensor.hpp"

namespace mimex {
namespace {

// log N(0 | 0, 1) = -0.5 * log(2*pi)
TEST(Gaussian, StandardNormalAtMean) {
  Tensor lp = gaussian_log_prob(Tensor::vector({0.0}), Tensor::vector({0.0}),
                                Tensor::vector({0.0}));
  ASSERT_EQ(lp.size(), 1u);
  EXPECT_NEAR(lp[0], -0.9189385332046727, 1e-15);
}

TEST(Gaussian, QuadraticTerm) {
  // log N(x | 0, 1) = -0.5 x^2 - 0.5 log(2 pi)
  Tensor lp = gaussian_log_prob(Tensor::vector({0.0}), Tensor::vector({0.0}),
                                Tensor::vector({2.0}));
  EXPECT_NEAR(lp[0], -2.0 - 0.9189385332046727, 1e-14);
}

TEST(Gaussian, DimensionsSum) {
  // independent dims add their log densities
  Tensor lp = gaussian_log_prob(Tensor::vector({0.0, 1.0}), Tensor::vector({0.0, 0.0}),
                                Tensor::vector({0.0, 1.0}));
  EXPECT_NEAR(lp[0], 2.0 * -0.9189385332046727, 1e-14);
}

TEST(Gaussian, DoublingSigmaCostsLogTwoAtMean) {
  Tensor at_one = gaussian_log_prob(Tensor::vector({0.5}), Tensor::vector({0.0}),
                                    Tensor::vector({0.5}));
  double log2 = std::log(2.0);
  Tensor at_two = gaussian_log_prob(Tensor::vector({0.5}), Tensor::vector({log2}),
                                    Tensor::vector({0.5}));
  EXPECT_NEAR(at_one[0] - at_two[0], log2, 1e-14);
}

TEST(Gaussian, BatchRows) {
  Tensor mean = Tensor::matrix(2, 2, {0.0, 0.0, 1.0, -1.0});
  Tensor x = Tensor::matrix(2, 2, {0.0, 0.0, 1.0, -1.0});
  Tensor lp = gaussian_log_prob(mean, Tensor::vector({0.0, 0.0}), x);
  ASSERT_EQ(lp.size(), 2u);
  EXPECT_NEAR(lp[0], lp[1], 1e-15);  // both rows sit at their mean
  EXPECT_NEAR(lp[0], 2.0 * -0.9189385332046727, 1e-14);
}

TEST(Gaussian, EntropyClosedForm) {
  // H per dim = log_std + 0.5 (1 + log 2 pi)
  std::vector<double> zero1{0.0};
  std::vector<double> zero2{0.0, 0.0};
  std::vector<double> ls{-1.25};
  EXPECT_NEAR(gaussian_entropy(zero1), 1.4189385332046727, 1e-15);
  EXPECT_NEAR(gaussian_entropy(zero2), 2.0 * 1.4189385332046727, 1e-14);
  EXPECT_NEAR(gaussian_entropy(ls), ls[0] + 1.4189385332046727, 1e-14);
}

TEST(Gaussian, ShapeAndFiniteRejection) {
  EXPECT_THROW(gaussian_log_prob(Tensor::vector({0.0, 0.0}), Tensor::vector({0.0}),
                                 Tensor::vector({0.0, 0.0})),
               ShapeError);
  EXPECT_THROW(gaussian_log_prob(Tensor::vector({0.0}), Tensor::vector({0.0}),
                                 Tensor::vector({0.0, 0.0})),
               ShapeError);
  double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(gaussian_log_prob(Tensor::vector({nan}), Tensor::vector({0.0}),
                                 Tensor::vector({0.0})),
               NumericError);
}

}  // namespace
}  // namespace mimex
