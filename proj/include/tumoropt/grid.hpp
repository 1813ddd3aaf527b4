#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tumoropt {

/// Raised when an API is called with inconsistent arguments (grid mismatch,
/// invalid derivative order, bad sizes).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the conjugate-gradient solver when the iteration budget runs out.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Uniform cell-centred Cartesian grid on [0, lx] (1D) or [0, lx] x [0, ly] (2D).
///
/// In 1D the y axis is inactive: ny = 1 and ly = 1, so hy = 1 and the cell
/// volume reduces to hx.
class Grid {
 public:
  static Grid line(int nx, double lx);
  static Grid rect(int nx, int ny, double lx, double ly);

  int dim() const { return dim_; }
  int nx() const { return counts_[0]; }
  int ny() const { return counts_[1]; }
  double lx() const { return lengths_[0]; }
  double ly() const { return lengths_[1]; }
  double hx() const { return lengths_[0] / counts_[0]; }
  double hy() const { return lengths_[1] / counts_[1]; }
  double cell_volume() const { return hx() * hy(); }
  std::size_t size() const { return static_cast<std::size_t>(counts_[0]) * counts_[1]; }
  double domain_volume() const { return lengths_[0] * lengths_[1]; }

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * counts_[0] + i; }
  /// Cell centre coordinates.
  double x(int i) const { return (i + 0.5) * hx(); }
  double y(int j) const { return dim_ == 1 ? 0.0 : (j + 0.5) * hy(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Grid(int dim, std::array<int, 2> counts, std::array<double, 2> lengths);

  int dim_;
  std::array<int, 2> counts_;
  std::array<double, 2> lengths_;
};

/// One real value per grid cell, row-major (x fastest).
class Field {
 public:
  explicit Field(const Grid& grid, double value = 0.0);
  /// Throws UsageError on size mismatch or non-finite input.
  Field(const Grid& grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& at(int i, int j) { return values_[grid_.index(i, j)]; }
  double at(int i, int j) const { return values_[grid_.index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& data() const { return values_; }

  bool all_finite() const;
  double max_abs() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);
  /// this += a * x
  Field& axpy(double a, const Field& x);

  friend bool operator==(const Field&, const Field&) = default;

 private:
  Grid grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
/// Cellwise product.
Field hadamard(const Field& a, const Field& b);
/// Cellwise application of fn.
Field map(const Field& f, const std::function<double(double)>& fn);

void require_same_grid(const Field& a, const Field& b);

/// Second-order Laplacian with mirror ghost cells (homogeneous Neumann).
Field neumann_laplacian(const Field& f);
void neumann_laplacian(const Field& f, Field& out);
/// Laplacian applied twice; encodes both dn f = 0 and dn(lap f) = 0.
Field neumann_biharmonic(const Field& f);

/// Face-based discrete Dirichlet energy: sum over interior faces of
/// cell_volume * (jump / h)^2. Boundary faces carry zero flux.
double grad_sq_integral(const Field& f);
double inner_product(const Field& f, const Field& g);
double norm_h(const Field& f);
double norm_v(const Field& f);
double integrate(const Field& f);

/// out = A(in). Operators passed to cg_solve must be symmetric positive
/// definite with respect to inner_product.
using LinearOperator = std::function<void(const Field& in, Field& out)>;

struct CgStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Matrix-free conjugate gradients. Returns x with
/// norm_h(A x - rhs) <= tol * norm_h(rhs), checked on the true residual.
Field cg_solve(const LinearOperator& apply, const Field& rhs, double tol, int max_iter,
               const Field* initial_guess = nullptr, CgStats* stats = nullptr);

}  // namespace tumoropt
