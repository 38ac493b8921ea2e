#include "momspec/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "momspec/error.hpp"
#include "momspec/rng.hpp"

namespace momspec {

namespace {

constexpr double kDegenerateGap = 1e-10;

bool leading_pair_degenerate(const Eigen::VectorXd& values) {
  if (values.size() < 2) return false;
  const double scale = std::max(std::abs(values(0)), std::abs(values(1)));
  return values(0) - values(1) <= kDegenerateGap * scale;
}

void project_out(Eigen::VectorXd& v, const Eigen::MatrixXd& basis, Eigen::Index count) {
  // twice, to keep the deflated iterate orthogonal to working precision
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < count; ++j) v -= basis.col(j).dot(v) * basis.col(j);
  }
}

Eigen::MatrixXd apply_columns(const MatVec& apply, const Eigen::MatrixXd& v) {
  Eigen::MatrixXd out(v.rows(), v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) out.col(j) = apply(v.col(j));
  return out;
}

// Rayleigh-Ritz on span(v), then subspace iteration until every Ritz pair
// has a true residual within the target. Deflated power iteration only
// controls residuals against the projected operator; the error of an early
// vector lies mostly along later eigenvectors and leaks into their residuals.
bool refine_subspace(const MatVec& apply, Eigen::MatrixXd& v, Eigen::VectorXd& values, double residual,
                     std::size_t cap) {
  for (std::size_t it = 0; it < cap; ++it) {
    const Eigen::MatrixXd tv = apply_columns(apply, v);
    const Eigen::MatrixXd h = v.transpose() * tv;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(0.5 * (h + h.transpose()));
    const Eigen::MatrixXd rot = ritz.eigenvectors().rowwise().reverse();
    values = ritz.eigenvalues().reverse();
    v = v * rot;
    const Eigen::MatrixXd rv = tv * rot - v * values.asDiagonal();
    const double ref = std::max(std::abs(values(0)), std::numeric_limits<double>::min());
    if (rv.colwise().norm().maxCoeff() <= residual * ref) return true;
    v = Eigen::HouseholderQR<Eigen::MatrixXd>(tv * rot).householderQ() * Eigen::MatrixXd::Identity(v.rows(), v.cols());
  }
  return false;
}

}  // namespace

Spectrum full_spectrum(const MomentOperator& t) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(t.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("full_spectrum: eigensolver failed for D = " + std::to_string(t.coord_dim()));
  }
  Spectrum out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  fix_signs(out.eigenvectors);
  out.full = true;
  out.degenerate = leading_pair_degenerate(out.eigenvalues);
  return out;
}

Spectrum top_eigens(const MatVec& apply, std::size_t coord_dim, std::size_t k,
                    const PowerOptions& options) {
  if (k < 1 || k > coord_dim) {
    throw InvalidArgument("top_eigens: k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(coord_dim) + "]");
  }
  const auto dim = static_cast<Eigen::Index>(coord_dim);
  const std::size_t cap =
      options.max_iterations != 0 ? options.max_iterations : std::max<std::size_t>(10 * coord_dim, 2000);

  Spectrum out;
  out.eigenvalues = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  out.eigenvectors = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(k));
  Rng rng(options.seed);
  double scale = 0.0;  // |lambda_1| once known

  for (Eigen::Index found = 0; found < static_cast<Eigen::Index>(k); ++found) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = rng.normal();
    project_out(v, out.eigenvectors, found);
    if (v.norm() == 0.0) v = Eigen::VectorXd::Unit(dim, found);
    v.normalize();

    double rho = 0.0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    double residual = 0.0;
    for (std::size_t it = 0; it < cap; ++it) {
      Eigen::VectorXd w = apply(v);
      project_out(w, out.eigenvectors, found);
      rho = v.dot(w);
      residual = (w - rho * v).norm();
      const double ref = std::max(found == 0 ? std::abs(rho) : scale, std::numeric_limits<double>::min());
      if ((std::abs(rho - prev) <= options.tolerance * std::abs(rho) && residual <= options.residual * ref) ||
          residual == 0.0) {
        converged = true;
        break;
      }
      prev = rho;
      const double norm = w.norm();
      if (norm == 0.0) break;  // v spans part of the kernel; rho = 0 is exact
      v = w / norm;
    }
    if (!converged && residual > options.residual * std::max(scale, std::abs(rho))) {
      throw NumericalError("top_eigens: eigenpair " + std::to_string(found + 1) + " did not converge in " +
                           std::to_string(cap) + " iterations (Rayleigh quotient " + std::to_string(rho) +
                           ", residual " + std::to_string(residual) + ")");
    }
    if (found == 0) scale = std::abs(rho);
    out.eigenvalues(found) = rho;
    out.eigenvectors.col(found) = v;
  }
  if (k > 1 && !refine_subspace(apply, out.eigenvectors, out.eigenvalues, options.residual, cap)) {
    throw NumericalError("top_eigens: subspace of " + std::to_string(k) + " pairs did not converge in " +
                         std::to_string(cap) + " iterations");
  }
  fix_signs(out.eigenvectors);
  out.full = k == coord_dim;
  out.degenerate = leading_pair_degenerate(out.eigenvalues);
  return out;
}

Spectrum top_eigens(const MomentOperator& t, std::size_t k, const PowerOptions& options) {
  const Eigen::MatrixXd& m = t.matrix();
  return top_eigens([&m](const Eigen::VectorXd& v) -> Eigen::VectorXd { return m * v; }, t.coord_dim(), k,
                    options);
}

Spectrum top_eigens_matrix_free(const SampleSet& samples, std::size_t k, const PowerOptions& options) {
  const Eigen::MatrixXd& x = samples.points();
  const Eigen::VectorXd& w = samples.weights();
  auto apply = [&](const Eigen::VectorXd& c) -> Eigen::VectorXd {
    const Eigen::MatrixXd a = vech_iso_inv(c).to_dense();
    // f_i = <A x_i, x_i>, then sum_i w_i f_i x_i x_i^T
    const Eigen::VectorXd f = (x * a).cwiseProduct(x).rowwise().sum();
    const Eigen::MatrixXd m = x.transpose() * (w.cwiseProduct(f)).asDiagonal() * x;
    return vech_iso(SymMatrix::from_dense(0.5 * (m + m.transpose())));
  };
  return top_eigens(apply, sym_dim(samples.dim()), k, options);
}

Spectrum leading_spectrum(const MomentOperator& t, std::size_t k) {
  k = std::min(k, t.coord_dim());
  if (t.coord_dim() <= kFullSolveLimit) {
    Spectrum s = full_spectrum(t);
    s.eigenvalues = s.eigenvalues.head(static_cast<Eigen::Index>(k)).eval();
    s.eigenvectors = s.eigenvectors.leftCols(static_cast<Eigen::Index>(k)).eval();
    s.full = k == t.coord_dim();
    return s;
  }
  return top_eigens(t, k);
}

MomentOperator rank_one_op(const SymMatrix& b) {
  const CoordVector v = vech_iso(b);
  return MomentOperator(b.dim(), v * v.transpose(), "rank_one");
}

MomentOperator centered_operator(const MomentOperator& t, const SymMatrix& b) {
  if (t.dim() != b.dim()) {
    throw DimensionError("centered_operator: operator is for d = " + std::to_string(t.dim()) +
                         ", second moment has d = " + std::to_string(b.dim()));
  }
  const CoordVector v = vech_iso(b);
  return MomentOperator(t.dim(), t.matrix() - v * v.transpose(), "centered");
}

void clamp_centered(Spectrum& spectrum, double reference) {
  if (spectrum.eigenvalues.size() == 0) return;
  const double top = std::max({spectrum.eigenvalues(0), reference, 0.0});
  for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i) {
    double& value = spectrum.eigenvalues(i);
    if (value >= 0.0) continue;
    if (value < -1e-9 * top) {
      throw InconsistentInputs("T - B (x) B has eigenvalue " + std::to_string(value) + " (lambda_1 = " +
                               std::to_string(top) + "); T and B do not come from one measure");
    }
    value = 0.0;
  }
}

}  // namespace momspec
