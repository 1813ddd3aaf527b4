#include "tumoropt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tumoropt {

Grid::Grid(int dim, std::array<int, 2> counts, std::array<double, 2> lengths)
    : dim_(dim), counts_(counts), lengths_(lengths) {
  if (dim != 1 && dim != 2) throw UsageError("grid dimension must be 1 or 2");
  for (int a = 0; a < dim; ++a) {
    if (counts[a] < 4) throw UsageError("grid needs at least 4 cells per active axis");
    if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a]))
      throw UsageError("grid lengths must be positive and finite");
  }
}

Grid Grid::line(int nx, double lx) { return Grid(1, {nx, 1}, {lx, 1.0}); }

Grid Grid::rect(int nx, int ny, double lx, double ly) { return Grid(2, {nx, ny}, {lx, ly}); }

Field::Field(const Grid& grid, double value) : grid_(grid), values_(grid.size(), value) {
  if (!std::isfinite(value)) throw UsageError("field value must be finite");
}

Field::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    std::ostringstream msg;
    msg << "field has " << values_.size() << " values but grid has " << grid_.size() << " cells";
    throw UsageError(msg.str());
  }
  if (!all_finite()) throw UsageError("field values must be finite");
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw UsageError("fields live on different grids");
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field& Field::axpy(double a, const Field& x) {
  require_same_grid(*this, x);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += a * x.values_[k];
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field hadamard(const Field& a, const Field& b) {
  require_same_grid(a, b);
  Field out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

Field map(const Field& f, const std::function<double(double)>& fn) {
  Field out(f.grid());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = fn(f[k]);
  return out;
}

void neumann_laplacian(const Field& f, Field& out) {
  const Grid& g = f.grid();
  if (!(out.grid() == g)) out = Field(g);
  const int nx = g.nx();
  const int ny = g.ny();
  const double ix2 = 1.0 / (g.hx() * g.hx());
  const double iy2 = 1.0 / (g.hy() * g.hy());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double c = f.at(i, j);
      const double w = i > 0 ? f.at(i - 1, j) : c;
      const double e = i < nx - 1 ? f.at(i + 1, j) : c;
      double v = (w - 2.0 * c + e) * ix2;
      if (g.dim() == 2) {
        const double s = j > 0 ? f.at(i, j - 1) : c;
        const double n = j < ny - 1 ? f.at(i, j + 1) : c;
        v += (s - 2.0 * c + n) * iy2;
      }
      out.at(i, j) = v;
    }
  }
}

Field neumann_laplacian(const Field& f) {
  Field out(f.grid());
  neumann_laplacian(f, out);
  return out;
}

Field neumann_biharmonic(const Field& f) { return neumann_laplacian(neumann_laplacian(f)); }

double grad_sq_integral(const Field& f) {
  const Grid& g = f.grid();
  const double vol = g.cell_volume();
  double sum = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i + 1 < g.nx(); ++i) {
      const double d = (f.at(i + 1, j) - f.at(i, j)) / g.hx();
      sum += d * d;
    }
  }
  if (g.dim() == 2) {
    for (int j = 0; j + 1 < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        const double d = (f.at(i, j + 1) - f.at(i, j)) / g.hy();
        sum += d * d;
      }
    }
  }
  return vol * sum;
}

double inner_product(const Field& f, const Field& g) {
  require_same_grid(f, g);
  double sum = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) sum += f[k] * g[k];
  return f.grid().cell_volume() * sum;
}

double norm_h(const Field& f) { return std::sqrt(inner_product(f, f)); }

double norm_v(const Field& f) { return std::sqrt(inner_product(f, f) + grad_sq_integral(f)); }

double integrate(const Field& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return f.grid().cell_volume() * sum;
}

Field cg_solve(const LinearOperator& apply, const Field& rhs, double tol, int max_iter,
               const Field* initial_guess, CgStats* stats) {
  if (!(tol > 0.0)) throw UsageError("cg tolerance must be positive");
  const Grid& g = rhs.grid();
  const double rhs_norm = norm_h(rhs);
  Field x = initial_guess ? *initial_guess : Field(g);
  if (initial_guess) require_same_grid(*initial_guess, rhs);
  if (rhs_norm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return Field(g);
  }
  const double target = tol * rhs_norm;

  Field ap(g);
  Field r = rhs;
  if (initial_guess) {
    apply(x, ap);
    r -= ap;
  }
  Field p = r;
  double rr = inner_product(r, r);
  int it = 0;
  while (true) {
    if (std::sqrt(rr) <= target) {
      // The recursive residual drifts from the true one; confirm and restart if needed.
      apply(x, ap);
      Field true_r = rhs - ap;
      const double true_norm = norm_h(true_r);
      if (true_norm <= target) {
        if (stats) *stats = {it, true_norm / rhs_norm};
        return x;
      }
      r = std::move(true_r);
      p = r;
      rr = true_norm * true_norm;
    }
    if (it >= max_iter) {
      std::ostringstream msg;
      msg << "conjugate gradients did not converge in " << max_iter
          << " iterations (relative residual " << std::sqrt(rr) / rhs_norm << ")";
      throw ConvergenceError(msg.str(), std::sqrt(rr) / rhs_norm, it);
    }
    apply(p, ap);
    const double pap = inner_product(p, ap);
    if (!(pap > 0.0)) {
      throw ConvergenceError("conjugate gradients hit a non-positive curvature direction",
                             std::sqrt(rr) / rhs_norm, it);
    }
    const double alpha = rr / pap;
    x.axpy(alpha, p);
    r.axpy(-alpha, ap);
    const double rr_new = inner_product(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = r[k] + beta * p[k];
    ++it;
  }
}

}  // namespace tumoropt
