#pragma once

// Symmetric d x d matrices with the trace inner product <A, B> = Tr(AB), and
// the isometric half-vectorization that turns that inner product into a plain
// dot product on R^{d(d+1)/2}.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace momspec {

/// Coordinates of a symmetric matrix in the vech_iso basis.
using CoordVector = Eigen::VectorXd;

/// Number of free coefficients of a d x d symmetric matrix.
constexpr std::size_t sym_dim(std::size_t d) { return d * (d + 1) / 2; }

/// Inverse of sym_dim; throws DimensionError if `coords` is not triangular.
std::size_t dim_from_sym_dim(std::size_t coords);

/// Real symmetric matrix stored as its upper triangle, row-major (i <= j).
class SymMatrix {
 public:
  SymMatrix() = default;
  /// Zero matrix of size d x d.
  explicit SymMatrix(std::size_t dim);

  static SymMatrix zero(std::size_t dim) { return SymMatrix(dim); }
  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(std::span<const double> diag);
  /// Rank-one matrix x x^T.
  static SymMatrix outer(std::span<const double> x);
  static SymMatrix outer(const Eigen::VectorXd& x);

  /// Ingest a dense matrix. Asymmetry up to 1e-8 * ||M||_F is averaged away;
  /// anything larger, or a non-finite entry, is rejected.
  static SymMatrix from_dense(const Eigen::MatrixXd& m);

  std::size_t dim() const { return dim_; }
  std::span<const double> upper() const { return upper_; }

  double operator()(std::size_t i, std::size_t j) const { return upper_[index(i, j)]; }
  void set(std::size_t i, std::size_t j, double value) { upper_[index(i, j)] = value; }
  void add(std::size_t i, std::size_t j, double value) { upper_[index(i, j)] += value; }

  Eigen::MatrixXd to_dense() const;

  double trace() const;
  double frobenius_norm() const;
  double frobenius_norm_sq() const;
  /// x^T A x
  double quadratic_form(std::span<const double> x) const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator-=(const SymMatrix& other);
  SymMatrix& operator*=(double c);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double c) { return a *= c; }
  friend SymMatrix operator*(double c, SymMatrix a) { return a *= c; }
  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    // row i of the upper triangle starts after d + (d-1) + ... + (d-i+1) entries
    return i * dim_ - (i * (i + 1)) / 2 + j;
  }

  std::size_t dim_ = 0;
  std::vector<double> upper_;
};

/// Eigenpairs of a small symmetric matrix, eigenvalues descending.
struct SmallSpectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  ///< columns, orthonormal
};

struct JacobiOptions {
  double tolerance = 1e-12;  ///< off-diagonal mass relative to ||A||_F
  int max_sweeps = 100;
};

/// Cyclic Jacobi eigensolver for a dense symmetric matrix. Eigenvectors are
/// sign-fixed so that their first coordinate above 1e-12 in magnitude is
/// positive. Throws NumericalError when max_sweeps is exhausted.
SmallSpectrum jacobi_eigen(const Eigen::MatrixXd& a, const JacobiOptions& options = {});

/// Flip eigenvector columns so the first entry with |v_k| > tol is positive.
void fix_signs(Eigen::MatrixXd& vectors, double tol = 1e-12);

CoordVector vech_iso(const SymMatrix& a);
SymMatrix vech_iso_inv(const CoordVector& v);

/// Tr(AB); throws DimensionError on mismatch.
double frobenius_inner(const SymMatrix& a, const SymMatrix& b);

/// Default dimension cap of eig_sym_small.
inline constexpr std::size_t kSmallEigenLimit = 512;

SmallSpectrum eig_sym_small(const SymMatrix& a, std::size_t limit = kSmallEigenLimit);

struct PsdParts {
  SymMatrix positive;
  SymMatrix negative;
};

/// A = A+ - A- with both parts PSD and ||A+ + A-||_F = ||A||_F.
PsdParts psd_split(const SymMatrix& a);

/// Principal square root. Throws NotPsdError if an eigenvalue is below
/// -1e-10 * lambda_max.
SymMatrix matrix_sqrt_psd(const SymMatrix& b);

/// Moore-Penrose pseudo-inverse of a PSD matrix; eigenvalues at or below
/// cutoff * lambda_max are treated as zero.
SymMatrix pseudo_inverse_psd(const SymMatrix& b, double cutoff = 1e-12);

/// S A S for symmetric S and A.
SymMatrix congruence(const SymMatrix& s, const SymMatrix& a);

}  // namespace momspec
