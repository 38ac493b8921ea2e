#include "momspec/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "momspec/diagnostics.hpp"
#include "momspec/error.hpp"

namespace momspec {

LeadingDirection leading_direction(const MomentOperator& t, const SymMatrix& b, double lambda1_t) {
  const MomentOperator c = centered_operator(t, b);
  Spectrum spec = c.coord_dim() <= kFullSolveLimit ? full_spectrum(c) : top_eigens(c, std::min<std::size_t>(2, c.coord_dim()));
  clamp_centered(spec, lambda1_t);

  LeadingDirection out;
  out.a = vech_iso_inv(spec.eigenvectors.col(0).normalized());
  out.lambda1 = spec.lambda(0);
  out.lambda2 = spec.eigenvalues.size() > 1 ? spec.lambda(1) : 0.0;
  // a zero centered operator leaves every direction equally good
  out.degenerate = spec.degenerate || out.lambda1 <= 1e-12 * std::abs(lambda1_t);
  return out;
}

LeadingDirection leading_direction(const MomentOperator& t, const SymMatrix& b) {
  return leading_direction(t, b, leading_spectrum(t, 1).lambda(0));
}

std::string_view to_string(BetaSource source) {
  switch (source) {
    case BetaSource::user: return "user";
    case BetaSource::oracle: return "oracle";
    case BetaSource::estimated: return "estimated";
  }
  return "unknown";
}

Decomposition median_split(const SampleSet& samples, const SymMatrix& a) {
  if (a.dim() != samples.dim()) throw DimensionError("median_split: A has the wrong dimension");
  if (std::abs(a.frobenius_norm() - 1.0) > 1e-9) {
    throw InvalidArgument("median_split: ||A||_F = " + std::to_string(a.frobenius_norm()) + ", expected 1");
  }
  const Eigen::MatrixXd& x = samples.points();
  const Eigen::VectorXd& w = samples.weights();
  const auto n = x.rows();
  const Eigen::VectorXd f = (x * a.to_dense()).cwiseProduct(x).rowwise().sum();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return f(i) > f(j); });

  Decomposition out;
  out.a = a;
  double cumulative = 0.0;
  out.b0 = f(order.back());
  for (const Eigen::Index i : order) {
    cumulative += w(i);
    if (cumulative >= 0.5) {
      out.b0 = f(i);
      break;
    }
  }

  double above = 0.0;
  double tie = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (f(i) > out.b0) above += w(i);
    if (f(i) == out.b0) tie += w(i);
  }
  out.alpha = tie > 0.0 ? std::clamp((0.5 - above) / tie, 0.0, 1.0) : 0.0;

  out.mass1.resize(n);
  out.mass2.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = f(i) > out.b0 ? 2.0 * w(i) : f(i) == out.b0 ? 2.0 * out.alpha * w(i) : 0.0;
    out.mass1(i) = m;
    out.mass2(i) = 2.0 * w(i) - m;
  }

  const Eigen::MatrixXd m1 = x.transpose() * out.mass1.asDiagonal() * x;
  const Eigen::MatrixXd m2 = x.transpose() * out.mass2.asDiagonal() * x;
  const Eigen::VectorXd diff = out.mass1 - out.mass2;
  const Eigen::MatrixXd delta = x.transpose() * diff.asDiagonal() * x;
  out.m1 = SymMatrix::from_dense(0.5 * (m1 + m1.transpose()));
  out.m2 = SymMatrix::from_dense(0.5 * (m2 + m2.transpose()));
  out.achieved = 0.5 * delta.norm();
  out.median_deviation = w.dot((f.array() - out.b0).abs().matrix());
  out.f_gap = 0.5 * std::abs(diff.dot(f));
  return out;
}

double guarantee_lower_bound(double gamma, double b_frob, double beta) {
  if (!(beta >= 1.0)) throw InvalidArgument("beta must be >= 1, got " + std::to_string(beta));
  const double b2 = beta * beta;
  const double b8 = b2 * b2 * b2 * b2;
  return b_frob * std::sqrt(gamma * gamma * gamma / (200.0 * b8));
}

double guarantee_lower_bound(const MomentOperator& t, const SymMatrix& b, double beta) {
  return guarantee_lower_bound(gap_statistic(t, b), b.frobenius_norm(), beta);
}

Decomposition run_decomposition(const SampleSet& samples, double beta, BetaSource source,
                                const FourthMomentOptions& options) {
  if (!(beta >= 1.0)) throw InvalidArgument("beta must be >= 1, got " + std::to_string(beta));
  const SymMatrix b = second_moment(samples);
  const MomentOperator t = fourth_moment_operator(samples, options);
  const Spectrum lead = leading_spectrum(t, 2);
  const double lambda2 = lead.eigenvalues.size() > 1 ? lead.lambda(1) : 0.0;
  const double gamma = gap_statistic(lead.lambda(0), lambda2, b.frobenius_norm_sq());
  const LeadingDirection dir = leading_direction(t, b, lead.lambda(0));

  Decomposition out = median_split(samples, dir.a);
  out.beta = beta;
  out.beta_source = source;
  out.gamma = gamma;
  out.b_frob = b.frobenius_norm();
  out.guarantee = guarantee_lower_bound(gamma, out.b_frob, beta);
  out.centered_lambda1 = dir.lambda1;
  out.degenerate = dir.degenerate;
  return out;
}

}  // namespace momspec
