#pragma once

// Brute-force ground truth at desk scale: the separation s by enumerating
// splits, beta by a dense grid over directions, and T straight from its
// definition.

#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "momspec/moments.hpp"

namespace momspec {

struct OracleResult {
  double value = 0.0;
  /// Subset sent to the first half (bit i = atom i), for split oracles.
  std::uint64_t mask = 0;
  /// Maximizing unit direction, for the beta oracle.
  Eigen::VectorXd direction;
  std::uint64_t instance_hash = 0;
  std::string method;
};

/// FNV-1a over the dimensions, coordinates and weights of the sample set.
std::uint64_t instance_hash(const SampleSet& samples);

/// Largest atom count accepted by the split oracles.
inline constexpr std::size_t kOracleMaxAtoms = 14;

/// s = 1/2 max ||M(mu_1) - M(mu_2)||_F over equal-weight splits, for n even
/// uniform atoms. The split masses form a polytope whose vertices are the
/// balanced subsets, and the objective is convex in the masses, so it
/// suffices to enumerate the C(n, n/2) subsets. Ties go to the smallest mask.
/// Throws Unsupported for odd n, n > 14 or non-uniform weights.
OracleResult s_exact_small(const SampleSet& samples);

/// 1/2 max ||M(nu_1) - M(nu_2)||_F over splits mu = alpha nu_1 + (1 - alpha)
/// nu_2 with uniform atoms and alpha n integral; the vertices are the subsets
/// of size alpha n. At alpha = 1/2 this is s_exact_small.
OracleResult s_weighted_exact_small(const SampleSet& samples, double alpha);

/// Default grid spacing of beta_exact_small, in radians.
inline constexpr double kBetaGridResolution = 1e-3;

/// max over unit v of (sum w <x,v>^p)^(1/p) / (sum w <x,v>^2)^(1/2) for
/// d <= 3: an angle grid (d = 2) or a Fibonacci grid on the half sphere
/// (d = 3) with spacing `resolution`, then local ascent from the best grid
/// points. Directions orthogonal to the support are skipped.
OracleResult beta_exact_small(const SampleSet& samples, int p, double resolution = kBetaGridResolution);

/// T assembled by applying A -> sum_i w_i <A, x_i x_i^T> x_i x_i^T to each
/// basis matrix. Limited to n <= 200, d <= 6.
MomentOperator t_operator_brute(const SampleSet& samples);

}  // namespace momspec
