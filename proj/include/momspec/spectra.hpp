#pragma once

// Eigendecompositions of moment operators, the rank-one operator B (x) B and
// the centered operator T - B (x) B.

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "momspec/moments.hpp"
#include "momspec/symspace.hpp"

namespace momspec {

/// Eigenpairs in descending order. Top-k results store only k pairs.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  ///< columns, orthonormal, sign-fixed
  bool full = false;
  /// lambda_1 and lambda_2 agree within 1e-10 relative.
  bool degenerate = false;

  double lambda(std::size_t i) const { return eigenvalues(static_cast<Eigen::Index>(i)); }
};

/// All D eigenpairs.
Spectrum full_spectrum(const MomentOperator& t);

struct PowerOptions {
  double tolerance = 1e-12;    ///< relative change of the Rayleigh quotient
  double residual = 1e-9;      ///< ||Tv - lambda v|| relative to lambda_1
  std::size_t max_iterations = 0;  ///< 0 means max(10 D, 2000)
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;  ///< start vectors
};

/// Matrix-vector product for an implicitly given symmetric operator.
using MatVec = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Leading k eigenpairs of a PSD operator by power iteration with deflation.
/// Throws NumericalError if an eigenpair fails to converge within the cap.
Spectrum top_eigens(const MatVec& apply, std::size_t coord_dim, std::size_t k,
                    const PowerOptions& options = {});
Spectrum top_eigens(const MomentOperator& t, std::size_t k, const PowerOptions& options = {});

/// Top-k eigenpairs of the empirical fourth-moment operator of `samples`
/// without forming it; each product costs O(n d^2).
Spectrum top_eigens_matrix_free(const SampleSet& samples, std::size_t k,
                                const PowerOptions& options = {});

/// Coordinate dimension up to which leading_spectrum uses the dense solver.
inline constexpr std::size_t kFullSolveLimit = 2000;

/// The k leading pairs, from the dense solver when D <= kFullSolveLimit and
/// from power iteration otherwise.
Spectrum leading_spectrum(const MomentOperator& t, std::size_t k);

/// B (x) B: A -> <A, B> B.
MomentOperator rank_one_op(const SymMatrix& b);

/// T - B (x) B. Not checked for PSD here; see clamp_centered.
MomentOperator centered_operator(const MomentOperator& t, const SymMatrix& b);

/// Zero out eigenvalues in [-1e-9 lambda, 0) of a centered-operator spectrum,
/// where lambda is the larger of its top eigenvalue and `reference` (normally
/// lambda_1(T)). Anything more negative means T and B come from different
/// measures and raises InconsistentInputs.
void clamp_centered(Spectrum& spectrum, double reference);

}  // namespace momspec
