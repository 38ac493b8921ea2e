#pragma once

// Equal-weight decomposition mu = 1/2 mu_1 + 1/2 mu_2 obtained by splitting
// at the median of <Ax, x>, where A is the leading eigenvector of T - B (x) B.

#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

#include "momspec/moments.hpp"
#include "momspec/spectra.hpp"
#include "momspec/symspace.hpp"

namespace momspec {

struct LeadingDirection {
  SymMatrix a;  ///< ||A||_F = 1, first nonzero vech coordinate positive
  double lambda1 = 0.0;  ///< lambda_1(T - B (x) B), clamped at 0
  double lambda2 = 0.0;
  bool degenerate = false;
};

/// Leading eigenvector of the centered operator. Throws InconsistentInputs
/// when T - B (x) B is not PSD to tolerance.
LeadingDirection leading_direction(const MomentOperator& t, const SymMatrix& b);
/// Same, with lambda_1(T) already known (it sets the PSD tolerance).
LeadingDirection leading_direction(const MomentOperator& t, const SymMatrix& b, double lambda1_t);

/// Where the beta behind a guarantee came from. Only user-certified and
/// oracle values make the guarantee rigorous.
enum class BetaSource { user, oracle, estimated };
std::string_view to_string(BetaSource source);

struct Decomposition {
  SymMatrix a;
  double b0 = 0.0;     ///< median of <Ax, x>
  double alpha = 0.0;  ///< share of the tie class at b0 sent to mu_1
  Eigen::VectorXd mass1;  ///< per-atom mass of mu_1; mass1 + mass2 = 2 w
  Eigen::VectorXd mass2;
  SymMatrix m1;  ///< second moment of mu_1
  SymMatrix m2;
  double achieved = 0.0;  ///< 1/2 ||M1 - M2||_F
  /// sum_i w_i |f_i - b0|, a lower bound on `achieved` when ||A||_F = 1.
  double median_deviation = 0.0;
  /// 1/2 |int f dmu_1 - int f dmu_2|, equal to median_deviation.
  double f_gap = 0.0;

  // Filled by run_decomposition.
  double guarantee = 0.0;
  double beta = 0.0;
  BetaSource beta_source = BetaSource::user;
  double gamma = 0.0;
  double b_frob = 0.0;
  double centered_lambda1 = 0.0;
  bool degenerate = false;
};

/// Split at the weighted median of f_i = <A x_i, x_i>: scanning f in
/// descending order, b0 is f at the atom where the cumulative mass reaches
/// 1/2. Atoms above b0 go to mu_1 with mass 2 w_i, atoms below to mu_2, and
/// the atoms bit-equal to b0 are shared so that both halves have mass one.
Decomposition median_split(const SampleSet& samples, const SymMatrix& a);

/// ||B||_F sqrt(Gamma^3 / (200 beta^8)). Throws InvalidArgument if beta < 1.
double guarantee_lower_bound(double gamma, double b_frob, double beta);
double guarantee_lower_bound(const MomentOperator& t, const SymMatrix& b, double beta);

/// Second moment, fourth-moment operator, leading direction, median split
/// and guarantee in one pass.
Decomposition run_decomposition(const SampleSet& samples, double beta, BetaSource source = BetaSource::user,
                                const FourthMomentOptions& options = {});

}  // namespace momspec
