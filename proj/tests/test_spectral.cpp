#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "platesim/spectral.hpp"

using namespace platesim;

namespace {

constexpr double kPi = 3.14159265358979323846;

SpectralField random_field(const BasisPtr& b, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpectralField f = zero_field(b);
  for (Index k = 0; k < f.coef.size(); ++k) f.coef[k] = u(rng);
  return f;
}

// Evaluate sum_k c_k phi_k and its gradient at an arbitrary point by direct
// summation; independent of the transform plans.
double eval_deriv_1d(const SpectralField& f, double x) {
  const double L = f.basis->domain().lengths[0];
  double s = 0.0;
  for (Index m = 0; m < f.coef.size(); ++m) {
    const double w = (m + 1) * kPi / L;
    s += f.coef[m] * std::sqrt(2.0 / L) * w * std::cos(w * x);
  }
  return s;
}

}  // namespace

TEST_CASE("eigenvalue closed forms") {
  auto b1 = build_basis({{1.0}}, {4});
  CHECK(b1->eigenvalues()[0] == doctest::Approx(kPi * kPi).epsilon(1e-14));
  CHECK(b1->eigenvalues()[1] == doctest::Approx(4 * kPi * kPi).epsilon(1e-14));

  auto b2 = build_basis({{1.0, 1.0}}, {3, 3});
  // mode (1,1) on the unit square
  CHECK(b2->eigenvalues()[0] == doctest::Approx(2 * kPi * kPi).epsilon(1e-14));
  // lexicographic order, last axis fastest: index 1 is (1,2)
  CHECK(b2->eigenvalues()[1] == doctest::Approx(5 * kPi * kPi).epsilon(1e-14));

  auto b3 = build_basis({{2.0}}, {4});
  CHECK(b3->eigenvalues()[2] == doctest::Approx(std::pow(1.5 * kPi, 2)).epsilon(1e-14));
}

TEST_CASE("grid size is dealias * modes per axis") {
  auto b = build_basis({{1.0, 2.0}}, {5, 7}, 2);
  CHECK(b->num_modes() == 35);
  CHECK(b->num_grid() == 10 * 14);
}

TEST_CASE("roundtrip spectral -> grid -> spectral") {
  int dims = 0;
  for (auto spec : {std::vector<int>{16}, std::vector<int>{8, 6}, std::vector<int>{4, 3, 5}}) {
    ++dims;
    std::vector<double> lens;
    for (size_t i = 0; i < spec.size(); ++i) lens.push_back(1.0 + 0.5 * i);
    auto b = build_basis({lens}, spec);
    auto f = random_field(b, 100 + dims);
    auto back = to_spectral(to_grid(f));
    CHECK(((back.coef - f.coef).abs().maxCoeff()) <= 1e-12 * f.coef.abs().maxCoeff());
  }
}

TEST_CASE("inner product matches grid quadrature") {
  for (int dealias : {1, 2}) {
    auto b = build_basis({{1.0, 1.5}}, {6, 5}, dealias);
    auto f = random_field(b, 7);
    auto g = random_field(b, 8);
    const double spec = inner_product(f, g);
    const double quad = grid_inner(to_grid(f), to_grid(g));
    CHECK(std::abs(spec - quad) <= 1e-10 * std::max(1.0, std::abs(spec)));
  }
}

TEST_CASE("gradient Parseval identity against brute-force quadrature") {
  const double L = 1.3;
  auto b = build_basis({{L}}, {9});
  auto f = random_field(b, 21);

  // trapezoid with endpoints on a refined grid; (f')^2 is a trigonometric
  // polynomial of frequency <= 2*9, so this quadrature is exact
  const int n = 4096;
  double acc = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double x = L * j / n;
    const double v = eval_deriv_1d(f, x);
    acc += (j == 0 || j == n ? 0.5 : 1.0) * v * v;
  }
  acc *= L / n;
  CHECK(acc == doctest::Approx(sobolev_sq(f, 1.0)).epsilon(1e-10));

  // and the production gradient squared-norm, via A^{1/2}
  auto grads = gradient(f);
  CHECK(grads.size() == 1);
}

TEST_CASE("operator factors K and B at random (lambda, gamma)") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ul(0.1, 1e4), ug(1e-3, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double lam = ul(rng), gam = ug(rng);
    const double k_factor = 1.0 / (1.0 + gam * lam);
    const double b_factor = lam / (1.0 + gam * lam);
    // identity (A^{-1}+gamma)^{-1} = 1/gamma - (1/gamma) * K
    CHECK(std::abs(b_factor - (1.0 / gam) * (1.0 - k_factor)) <= 1e-14 * std::abs(b_factor));
    CHECK(std::abs(k_factor * lam - b_factor * 1.0) <= 1e-12 * lam);
  }

  auto b = build_basis({{1.0}}, {8});
  auto f = random_field(b, 3);
  const double gam = 0.7;
  auto kf = apply_K(f, gam);
  auto bf = apply_B(f, gam);
  for (Index m = 0; m < f.coef.size(); ++m) {
    const double lam = b->eigenvalues()[m];
    CHECK(kf.coef[m] == doctest::Approx(f.coef[m] / (1 + gam * lam)).epsilon(1e-14));
    CHECK(bf.coef[m] == doctest::Approx(f.coef[m] * lam / (1 + gam * lam)).epsilon(1e-14));
  }
  // K at mode 1, gamma = 1 on the unit interval
  auto b1 = build_basis({{1.0}}, {1});
  SpectralField e1{b1, ArrayXd::Ones(1)};
  CHECK(apply_K(e1, 1.0).coef[0] == doctest::Approx(0.09199966835037524).epsilon(1e-14));
  CHECK(apply_B(e1, 1.0).coef[0] == doctest::Approx(0.9080003316496248).epsilon(1e-14));
}

TEST_CASE("power of A is the coefficient-wise eigenvalue power") {
  auto b = build_basis({{1.0, 1.0}}, {4, 4});
  auto f = random_field(b, 5);
  auto half = apply_power_of_A(f, 0.5);
  auto whole = apply_power_of_A(half, 0.5);
  auto direct = apply_power_of_A(f, 1.0);
  CHECK((whole.coef - direct.coef).abs().maxCoeff() <= 1e-12 * direct.coef.abs().maxCoeff());
  auto inv = apply_power_of_A(direct, -1.0);
  CHECK((inv.coef - f.coef).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("mismatched shapes are rejected") {
  auto b1 = build_basis({{1.0}}, {4});
  auto b2 = build_basis({{1.0}}, {5});
  auto f = random_field(b1, 1);
  auto g = random_field(b2, 2);
  CHECK_THROWS_AS(inner_product(f, g), std::invalid_argument);
  SpectralField bad{b1, ArrayXd::Zero(3)};
  CHECK_THROWS_AS(to_grid(bad), std::invalid_argument);
  CHECK_THROWS_AS(build_basis({{-1.0}}, {4}), std::invalid_argument);
  CHECK_THROWS_AS(build_basis({{1.0}}, {0}), std::invalid_argument);
}
