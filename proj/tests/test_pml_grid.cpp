// Grid geometry, PML profile, and slowness extension.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lsweeps/grid.hpp"

using namespace lsweeps;

TEST(Grid, GeometryAndIndexing) {
  const Grid2D g{101, 101, 1.0 / 100, 20};
  EXPECT_EQ(g.nx(), 141);
  EXPECT_EQ(g.ny(), 141);
  EXPECT_EQ(g.size(), 141 * 141);
  EXPECT_NEAR(g.x(20), 0.0, 1e-15);
  EXPECT_NEAR(g.x(120), 1.0, 1e-12);
  EXPECT_NEAR(g.y(0), -0.2, 1e-12);
  EXPECT_EQ(g.index(0, 1), 141);
  EXPECT_EQ(g.bulk_box().x.lo, 20);
  EXPECT_EQ(g.bulk_box().x.hi, 121);
  EXPECT_TRUE(g.full_box().contains(0, 140));
  EXPECT_FALSE(g.bulk_box().contains(19, 50));
}

TEST(Grid, OmegaMatchesResolution) {
  // 10 points per wavelength on the n-point unit grid: omega*h = 2*pi/ppw.
  EXPECT_NEAR(omega_for(202, 10.0) / (2.0 * std::numbers::pi), 20.1, 1e-12);
  EXPECT_NEAR(omega_for(101, 10.0) * (1.0 / 100) , 2.0 * std::numbers::pi / 10.0, 1e-12);
}

TEST(Grid, PmlPointCount) {
  EXPECT_EQ(pml_points(2.0, 10.0, 1.0), 20);
  EXPECT_EQ(pml_points(2.0, 10.0, 0.25), 40);
  EXPECT_EQ(pml_points(1.5, 10.0, 1.0), 15);
  EXPECT_EQ(pml_points(1.0, 10.0, 0.3), 19);  // ceil(10 / sqrt(0.3))
}

TEST(Pml, CubicProfile) {
  const double omega = omega_for(101, 10.0);
  const Grid2D g{101, 101, 1.0 / 100, 20};
  const PmlSpec spec = make_pml_spec(g, omega);
  EXPECT_DOUBLE_EQ(spec.delta_pml, 0.2);
  // Amplitude ln(omega)/lambda: a w-wavelength layer absorbs w*ln(omega)/4,
  // so a collar round trip decays like omega^(-w/2).
  EXPECT_DOUBLE_EQ(spec.sigma_max, omega * std::log(omega) / (2.0 * std::numbers::pi));

  EXPECT_EQ(pml_sigma_at_distance(0.0, spec), 0.0);
  EXPECT_EQ(pml_sigma_at_distance(-0.05, spec), 0.0);
  const double d = 0.1;
  const double t = d / spec.delta_pml;
  const double want = spec.sigma_max * t * t * t;
  EXPECT_NEAR(pml_sigma_at_distance(d, spec), want, 1e-12 * want);
  // Monotone in depth, full strength sigma_max at the outer edge.
  EXPECT_LT(pml_sigma_at_distance(0.05, spec), pml_sigma_at_distance(0.15, spec));
  EXPECT_NEAR(pml_sigma_at_distance(spec.delta_pml, spec), spec.sigma_max,
              1e-12 * spec.sigma_max);

  // Window form: zero on [0, 1], ramping outside.
  EXPECT_EQ(pml_sigma(0.5, 0.0, 1.0, spec), 0.0);
  EXPECT_EQ(pml_sigma(0.0, 0.0, 1.0, spec), 0.0);
  EXPECT_GT(pml_sigma(-0.25, 0.0, 1.0, spec), 0.0);
  EXPECT_EQ(pml_sigma(-0.25, 0.0, 1.0, spec), pml_sigma(1.25, 0.0, 1.0, spec));
}

TEST(Pml, StretchFactor) {
  const double omega = omega_for(101, 10.0);
  const Grid2D g{101, 101, 1.0 / 100, 20};
  const PmlSpec spec = make_pml_spec(g, omega);
  EXPECT_EQ(pml_alpha(0.5, omega, spec, 0.0, 1.0), cplx(1.0, 0.0));
  const cplx a = pml_alpha(-0.15, omega, spec, 0.0, 1.0);
  EXPECT_LE(std::abs(a), 1.0);
  EXPECT_LT(a.imag(), 0.0);  // 1/(1 + i s) = (1 - i s)/(1 + s^2)
  const double sigma = pml_sigma(-0.15, 0.0, 1.0, spec);
  const cplx expect = 1.0 / cplx(1.0, sigma / omega);
  EXPECT_NEAR(std::abs(a - expect), 0.0, 1e-15);
}

TEST(Slowness, NearestPointExtension) {
  SlownessModel bulk;
  bulk.nx = 3;
  bulk.ny = 3;
  bulk.h = 0.5;
  bulk.m = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0};  // rows bottom to top
  bulk.m0 = 1.0;
  const Grid2D g{3, 3, 0.5, 2};
  const auto ext = extend_slowness(bulk, g);
  ASSERT_EQ(ext.size(), 49u);
  auto at = [&](int ix, int iy) { return ext[static_cast<size_t>(g.index(ix, iy))]; };
  EXPECT_EQ(at(2, 2), 1.0);  // bulk copied
  EXPECT_EQ(at(3, 3), 5.0);
  EXPECT_EQ(at(4, 4), 9.0);
  EXPECT_EQ(at(0, 0), 1.0);  // corner clamps to nearest corner
  EXPECT_EQ(at(6, 6), 9.0);
  EXPECT_EQ(at(0, 3), 4.0);  // edge clamps to nearest edge point
  EXPECT_EQ(at(3, 6), 8.0);

  SlownessModel wrong = bulk;
  wrong.nx = 4;
  EXPECT_THROW(extend_slowness(wrong, g), std::invalid_argument);
}
