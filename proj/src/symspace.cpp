#include "momspec/symspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "momspec/error.hpp"

namespace momspec {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

void require_same_dim(const SymMatrix& a, const SymMatrix& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()) + ")");
  }
}

SymMatrix from_eigen(const SmallSpectrum& spec, auto&& transform) {
  const auto d = static_cast<Eigen::Index>(spec.eigenvalues.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double value = transform(spec.eigenvalues(k));
    if (value != 0.0) {
      m.noalias() += value * spec.eigenvectors.col(k) * spec.eigenvectors.col(k).transpose();
    }
  }
  SymMatrix out(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) out.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  }
  return out;
}

}  // namespace

std::size_t dim_from_sym_dim(std::size_t coords) {
  const auto d = static_cast<std::size_t>(
      std::llround((std::sqrt(8.0 * static_cast<double>(coords) + 1.0) - 1.0) / 2.0));
  if (sym_dim(d) != coords) {
    throw DimensionError("length " + std::to_string(coords) + " is not of the form d(d+1)/2");
  }
  return d;
}

SymMatrix::SymMatrix(std::size_t dim) : dim_(dim), upper_(sym_dim(dim), 0.0) {}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.set(i, i, diag[i]);
  return m;
}

SymMatrix SymMatrix::outer(std::span<const double> x) {
  SymMatrix m(x.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i; j < x.size(); ++j) m.upper_[k++] = x[i] * x[j];
  }
  return m;
}

SymMatrix SymMatrix::outer(const Eigen::VectorXd& x) {
  return outer(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("symmetric matrix must be square, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw InvalidArgument("matrix has non-finite entries");
  const double norm = m.norm();
  const double asym = m.rows() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * norm) {
    throw InvalidArgument("matrix is not symmetric: max |A_ij - A_ji| = " + std::to_string(asym));
  }
  const auto d = static_cast<std::size_t>(m.rows());
  SymMatrix out(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      out.set(i, j, 0.5 * (m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                           m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i))));
    }
  }
  return out;
}

Eigen::MatrixXd SymMatrix::to_dense() const {
  const auto d = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd m(d, d);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      m(i, j) = upper_[k];
      m(j, i) = upper_[k];
      ++k;
    }
  }
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double SymMatrix::frobenius_norm_sq() const {
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = i; j < dim_; ++j) {
      const double v = upper_[k++];
      s += (i == j ? 1.0 : 2.0) * v * v;
    }
  }
  return s;
}

double SymMatrix::frobenius_norm() const { return std::sqrt(frobenius_norm_sq()); }

double SymMatrix::quadratic_form(std::span<const double> x) const {
  if (x.size() != dim_) throw DimensionError("quadratic_form: vector length mismatch");
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    s += upper_[k++] * x[i] * x[i];
    for (std::size_t j = i + 1; j < dim_; ++j) s += 2.0 * upper_[k++] * x[i] * x[j];
  }
  return s;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  require_same_dim(*this, other, "operator+");
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] += other.upper_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
  require_same_dim(*this, other, "operator-");
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] -= other.upper_[k];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double c) {
  for (double& v : upper_) v *= c;
  return *this;
}

CoordVector vech_iso(const SymMatrix& a) {
  const std::size_t d = a.dim();
  CoordVector v(static_cast<Eigen::Index>(sym_dim(d)));
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j, ++k) {
      v(static_cast<Eigen::Index>(k)) = (i == j ? 1.0 : kSqrt2) * a.upper()[k];
    }
  }
  return v;
}

SymMatrix vech_iso_inv(const CoordVector& v) {
  const std::size_t d = dim_from_sym_dim(static_cast<std::size_t>(v.size()));
  SymMatrix a(d);
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j, ++k) {
      const double c = v(static_cast<Eigen::Index>(k));
      a.set(i, j, i == j ? c : c / kSqrt2);
    }
  }
  return a;
}

double frobenius_inner(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim(a, b, "frobenius_inner");
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    s += a.upper()[k] * b.upper()[k];
    ++k;
    for (std::size_t j = i + 1; j < a.dim(); ++j, ++k) s += 2.0 * a.upper()[k] * b.upper()[k];
  }
  return s;
}

SmallSpectrum eig_sym_small(const SymMatrix& a, std::size_t limit) {
  if (a.dim() > limit) {
    throw CapacityError("eig_sym_small: dimension " + std::to_string(a.dim()) +
                        " exceeds limit " + std::to_string(limit));
  }
  return jacobi_eigen(a.to_dense());
}

PsdParts psd_split(const SymMatrix& a) {
  const SmallSpectrum spec = eig_sym_small(a);
  const double scale = spec.eigenvalues.size() == 0 ? 0.0 : spec.eigenvalues.cwiseAbs().maxCoeff();
  const double floor = 1e-10 * scale;
  PsdParts parts{from_eigen(spec, [&](double l) { return l > floor ? l : 0.0; }),
                 from_eigen(spec, [&](double l) { return l < -floor ? -l : 0.0; })};
  return parts;
}

SymMatrix matrix_sqrt_psd(const SymMatrix& b) {
  const SmallSpectrum spec = eig_sym_small(b);
  if (spec.eigenvalues.size() == 0) return b;
  const double top = std::max(spec.eigenvalues(0), 0.0);
  const double lowest = spec.eigenvalues(spec.eigenvalues.size() - 1);
  if (lowest < -1e-10 * top || (top == 0.0 && lowest < 0.0)) {
    throw NotPsdError("matrix_sqrt_psd: eigenvalue " + std::to_string(lowest) +
                      " below tolerance (lambda_max = " + std::to_string(top) + ")");
  }
  return from_eigen(spec, [](double l) { return l > 0.0 ? std::sqrt(l) : 0.0; });
}

SymMatrix pseudo_inverse_psd(const SymMatrix& b, double cutoff) {
  const SmallSpectrum spec = eig_sym_small(b);
  if (spec.eigenvalues.size() == 0) return b;
  const double threshold = cutoff * std::max(spec.eigenvalues(0), 0.0);
  return from_eigen(spec, [&](double l) { return l > threshold ? 1.0 / l : 0.0; });
}

SymMatrix congruence(const SymMatrix& s, const SymMatrix& a) {
  require_same_dim(s, a, "congruence");
  const Eigen::MatrixXd sd = s.to_dense();
  const Eigen::MatrixXd prod = sd * a.to_dense() * sd;
  return SymMatrix::from_dense(0.5 * (prod + prod.transpose()));
}

}  // namespace momspec
