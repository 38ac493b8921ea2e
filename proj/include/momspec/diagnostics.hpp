#pragma once

// Quantitative checks on a measure's moments: the chain
// trace(T)/d <= lambda_1, ||B||_F^2 <= lambda_1 <= ||T||_F, the gap statistic
// Gamma with the two-sided bounds it gives on (s / ||B||_F)^2, and estimates
// of the L^p-L^2 constant beta.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "momspec/moments.hpp"
#include "momspec/spectra.hpp"
#include "momspec/symspace.hpp"

namespace momspec {

/// The three differences that must be nonnegative for (T, B) from one measure.
struct SpectralChainSlacks {
  double lambda1 = 0.0;
  double above_average = 0.0;  ///< lambda_1 - trace(T) / d
  double above_b_norm = 0.0;   ///< lambda_1 - ||B||_F^2
  double below_frobenius = 0.0;  ///< ||T||_F - lambda_1
};

/// Throws InconsistentInputs if a slack is below -1e-9 lambda_1.
SpectralChainSlacks check_spectral_chain(const MomentOperator& t, const SymMatrix& b, double lambda1);
SpectralChainSlacks check_spectral_chain(const MomentOperator& t, const SymMatrix& b);

/// Gamma = lambda_2 / lambda_1 + (1 - ||B||_F^2 / lambda_1); each term is
/// clamped at 0 when it is negative by at most 1e-9. Throws DegenerateMeasure
/// when lambda_1 <= 0.
double gap_statistic(double lambda1, double lambda2, double b_frob_sq);
double gap_statistic(const MomentOperator& t, const SymMatrix& b);

struct GapReport {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double b_frob_sq = 0.0;
  double gamma = 0.0;
  /// Bounds on (s / ||B||_F)^2. The upper one holds for every measure.
  double s_upper_normalized_sq = 0.0;
  double s_lower_normalized_sq = 0.0;
  double beta_used = 0.0;
  double trace_t = 0.0;
  SpectralChainSlacks slacks;
};

/// Throws InvalidArgument when beta < 1.
GapReport separation_bounds(const MomentOperator& t, const SymMatrix& b, double beta);
GapReport separation_bounds(const MomentOperator& t, const SymMatrix& b, const Spectrum& leading, double beta);

struct BetaOptions {
  /// Candidates kept for coordinate ascent, best first.
  std::size_t refine_top = 16;
  std::size_t max_sweeps = 100;
  std::size_t dense_limit = kDefaultDenseLimit;
};

struct BetaEstimate {
  int p = 4;
  /// Largest ratio found; a lower bound on the smallest valid beta.
  double lower = 0.0;
  /// lambda_1(whitened T)^(1/4), an upper bound on beta for p = 4. Absent
  /// for p = 8, and when the whitened operator is too large for the dense
  /// solver (d over the dense limit or D > kFullSolveLimit).
  std::optional<double> certified_upper_p4;
  std::size_t directions_tested = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd argmax;  ///< unit direction attaining `lower`
};

/// (sum w <x, v>^p)^(1/p) / (sum w <x, v>^2)^(1/2), or nullopt when the
/// denominator is at most 1e-14 trace(B) |v|^2.
std::optional<double> beta_ratio(const SampleSet& samples, const Eigen::VectorXd& v, int p);

/// Candidate search for the L^p-L^2 constant. Throws DegenerateMeasure when
/// every point is at the origin.
BetaEstimate estimate_beta(const SampleSet& samples, int p, std::size_t n_dirs, std::uint64_t seed,
                           const BetaOptions& options = {});

/// Operator of the whitened measure: S T(S A S) S with S = (B^+)^(1/2).
MomentOperator whitened_operator(const MomentOperator& t, const SymMatrix& b);
/// (B^+)^(1/2) with pseudo-inverse cutoff 1e-12 lambda_max.
SymMatrix whitening_map(const SymMatrix& b);

/// max_i beta_i * max_i alpha_i^(1/p - 1/2): a valid constant for the mixture
/// sum alpha_i mu_i when beta_i is valid for mu_i.
double beta_mixture_bound(const std::vector<double>& betas, const std::vector<double>& weights, int p);

struct UnequalBounds {
  double alpha = 0.0;
  double lower = 0.0;  ///< s / (2 (1 - alpha))
  double upper = 0.0;  ///< s / (2 alpha)
};

/// Bounds on half the largest second-moment gap over splits
/// mu = alpha nu_1 + (1 - alpha) nu_2, given s for equal-weight splits.
UnequalBounds unequal_weight_bounds(double s_value, double alpha);

}  // namespace momspec
