#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "tumoropt/grid.hpp"

using namespace tumoropt;
using namespace testing_support;

namespace {

Field random_field(const Grid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Field f(g);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = dist(rng);
  return f;
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("grid geometry") {
  const Grid g = Grid::rect(8, 4, 2.0, 1.0);
  CHECK(g.dim() == 2);
  CHECK(g.size() == 32);
  CHECK(g.hx() == doctest::Approx(0.25));
  CHECK(g.hy() == doctest::Approx(0.25));
  CHECK(g.cell_volume() == doctest::Approx(0.0625));
  const Grid l = Grid::line(16, 3.2);
  CHECK(l.ny() == 1);
  CHECK(l.cell_volume() == doctest::Approx(0.2));
  CHECK_THROWS_AS(Grid::line(3, 1.0), UsageError);
  CHECK_THROWS_AS(Grid::line(8, 0.0), UsageError);
}

TEST_CASE("field construction validates size and finiteness") {
  const Grid g = Grid::line(4, 4.0);
  CHECK_THROWS_AS(Field(g, std::vector<double>{1, 2, 3}), UsageError);
  CHECK_THROWS_AS(Field(g, std::vector<double>{1, 2, NAN, 4}), UsageError);
  CHECK_THROWS_AS(inner_product(Field(g), Field(Grid::line(5, 4.0))), UsageError);
}

TEST_CASE("laplacian hand examples") {
  const Grid g = Grid::line(4, 4.0);
  const Field f(g, {1, 2, 4, 8});
  const Field lap = neumann_laplacian(f);
  CHECK(lap.data() == std::vector<double>{1, 1, 2, -4});
  // hand stencil on [1, 1, 2, -4]; the entries sum to zero as conservation requires
  const Field bih = neumann_biharmonic(f);
  CHECK(bih.data() == std::vector<double>{0, 1, -7, 6});
  CHECK(neumann_laplacian(Field(g, 3.7)).max_abs() == 0.0);
  CHECK(neumann_biharmonic(Field(g, -2.0)).max_abs() == 0.0);
}

TEST_CASE("separable 2D laplacian matches two 1D calls") {
  const int nx = 8, ny = 6;
  const Grid g2 = Grid::rect(nx, ny, 2.0, 1.5);
  const Grid gx = Grid::line(nx, 2.0);
  const Grid gy = Grid::line(ny, 1.5);
  const Field a = random_field(gx, 1);
  const Field b = random_field(gy, 2);
  Field f(g2);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) f.at(i, j) = a[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(j)];
  const Field la = neumann_laplacian(a), lb = neumann_laplacian(b), lf = neumann_laplacian(f);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      CHECK(lf.at(i, j) == doctest::Approx(la[static_cast<std::size_t>(i)] + lb[static_cast<std::size_t>(j)]).epsilon(1e-12));
}

TEST_CASE("library laplacian equals independent dense stencil") {
  const Grid g = Grid::line(10, 2.5);
  const Eigen::MatrixXd lib = assemble(g, [](const Field& f) { return neumann_laplacian(f); });
  const Eigen::MatrixXd ref = dense_laplacian_1d(10, g.hx());
  CHECK((lib - ref).norm() <= 1e-12 * ref.norm());
}

TEST_CASE("biharmonic is the laplacian composed twice") {
  const Grid g = Grid::rect(7, 5, 1.4, 1.0);
  const Field f = random_field(g, 3);
  CHECK(neumann_biharmonic(f) == neumann_laplacian(neumann_laplacian(f)));
}

TEST_CASE("conservation, symmetry and negative semidefiniteness") {
  for (const Grid& g : {Grid::line(33, 3.0), Grid::rect(12, 9, 2.0, 1.0)}) {
    for (unsigned seed = 0; seed < 5; ++seed) {
      const Field f = random_field(g, seed);
      const Field h = random_field(g, seed + 100);
      const Field lf = neumann_laplacian(f);
      CHECK(std::abs(integrate(lf)) <= 1e-12 * norm_h(lf));
      CHECK(rel_diff(inner_product(lf, h), inner_product(f, neumann_laplacian(h))) <= 1e-12);
      CHECK(rel_diff(inner_product(lf, f), -grad_sq_integral(f)) <= 1e-10);
    }
  }
}

TEST_CASE("grad_sq_integral examples") {
  // one interior jump of 1 across a face with h = 1
  const Grid g = Grid::line(4, 4.0);
  CHECK(grad_sq_integral(Field(g, {0, 1, 1, 1})) == doctest::Approx(1.0));
  CHECK(grad_sq_integral(Field(g, 5.0)) == 0.0);
  const Field f = random_field(Grid::line(9, 1.0), 4);
  CHECK(grad_sq_integral(3.0 * f) == doctest::Approx(9.0 * grad_sq_integral(f)).epsilon(1e-14));
}

TEST_CASE("inner products and norms") {
  const Grid unit = Grid::line(4, 1.0);
  CHECK(inner_product(Field(unit, 1.0), Field(unit, 1.0)) == doctest::Approx(1.0));
  CHECK(inner_product(Field(unit, {1, 1, 0, 0}), Field(unit, {0, 0, 1, 1})) == 0.0);
  const Grid g = Grid::line(4, 2.0);
  CHECK(inner_product(Field(g, {1, 2, 0, 0}), Field(g, {3, 4, 0, 0})) == doctest::Approx(5.5));
  CHECK(integrate(Field(g, {1, 2, 0, 0})) == doctest::Approx(1.5));
  const Field f = random_field(Grid::line(8, 2.0), 9);
  CHECK(norm_v(f) == doctest::Approx(std::sqrt(norm_h(f) * norm_h(f) + grad_sq_integral(f))));
}

TEST_CASE("eigenfunction convergence is second order") {
  const double L = 3.0;
  std::vector<double> errs;
  for (int n : {16, 32, 64, 128}) {
    const Grid g = Grid::line(n, L);
    Field f(g);
    for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = std::cos(std::numbers::pi * g.x(i) / L);
    const Field lf = neumann_laplacian(f);
    const double k2 = std::pow(std::numbers::pi / L, 2);
    double e = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) e = std::max(e, std::abs(lf[i] + k2 * f[i]));
    errs.push_back(e);
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    CHECK(order >= 1.9);
    CHECK(order <= 2.1);
  }
}

TEST_CASE("cg trivial operators") {
  const Grid g = Grid::line(8, 1.0);
  const Field r = random_field(g, 5);
  const Field x1 = cg_solve([](const Field& in, Field& out) { out = in; }, r, 1e-14, 10);
  CHECK((x1 - r).max_abs() <= 1e-15);
  const Field x2 = cg_solve([](const Field& in, Field& out) { out = 2.0 * in; }, r, 1e-14, 10);
  CHECK((x2 - 0.5 * r).max_abs() <= 1e-15);
  CHECK(cg_solve([](const Field& in, Field& out) { out = in; }, Field(g), 1e-12, 10).max_abs() == 0.0);
}

TEST_CASE("cg matches dense solve of I - tau lap and of the phase operator") {
  const double tau = 0.05, s = 5.75;
  for (int n : {8, 16}) {
    const Grid g = Grid::line(n, 0.2 * n);
    const Eigen::MatrixXd lap = dense_laplacian_1d(n, g.hx());
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd nmat = eye - tau * lap;
    const Eigen::MatrixXd mmat = eye + tau * (lap * lap - s * lap);
    const Field rhs = random_field(g, static_cast<unsigned>(n));
    const Field xn = cg_solve([&](const Field& in, Field& out) { out = in - tau * neumann_laplacian(in); }, rhs, 1e-14,
                              500);
    const Field xm = cg_solve(
        [&](const Field& in, Field& out) {
          out = in + tau * (neumann_biharmonic(in) - s * neumann_laplacian(in));
        },
        rhs, 1e-14, 500);
    const Eigen::VectorXd refn = nmat.llt().solve(to_vec(rhs));
    const Eigen::VectorXd refm = mmat.llt().solve(to_vec(rhs));
    CHECK((to_vec(xn) - refn).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((to_vec(xm) - refm).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("cg budget overrun raises with residual") {
  const Grid g = Grid::line(64, 1.0);
  const Field rhs = random_field(g, 11);
  try {
    cg_solve([](const Field& in, Field& out) { out = in - 10.0 * neumann_laplacian(in); }, rhs, 1e-14, 2);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 1e-14);
    CHECK(e.iterations() == 2);
  }
}

}
