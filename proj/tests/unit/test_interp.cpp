#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gmc/errors.hpp"
#include "gmc/interp.hpp"

using namespace gmc;

TEST(UniformHermite, ExactOnCubics) {
  auto f = [](double x) { return x * x * x - 2 * x + 1; };
  auto df = [](double x) { return 3 * x * x - 2; };
  std::vector<double> y, dy;
  for (int i = 0; i <= 10; ++i) {
    y.push_back(f(i * 0.3));
    dy.push_back(df(i * 0.3));
  }
  const UniformHermite h(0.0, 3.0, y, dy);
  for (double x : {0.0, 0.11, 1.37, 2.05, 2.99}) EXPECT_NEAR(h(x), f(x), 1e-12);
}

TEST(UniformPchip, ReproducesLinearData) {
  std::vector<double> y;
  for (int i = 0; i <= 8; ++i) y.push_back(2.0 * i / 8 - 1);
  const UniformPchip p(0.0, 1.0, y);
  for (double x : {0.0, 0.13, 0.5, 0.77, 1.0}) EXPECT_NEAR(p(x), 2 * x - 1, 1e-14);
}

TEST(UniformPchip, MonotoneDataStaysMonotone) {
  const UniformPchip p(0.0, 4.0, {0, 0, 1, 1, 5});
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double v = p(i * 0.01);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
  EXPECT_EQ(p(-1.0), 0.0);
  EXPECT_EQ(p(9.0), 5.0);
}

TEST(LinearInterp, InsideAndOutside) {
  const std::vector<double> xs{0, 1, 3}, ys{0, 2, 6};
  EXPECT_DOUBLE_EQ(linear_interp(xs, ys, 2.0), 4.0);
  EXPECT_THROW(linear_interp(xs, ys, 3.5), RangeError);
}
