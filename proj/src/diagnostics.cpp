#include "momspec/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "momspec/error.hpp"
#include "momspec/rng.hpp"

namespace momspec {

namespace {

constexpr double kSlackTolerance = 1e-9;
constexpr double kNullDirection = 1e-14;

void require_beta_p(int p) {
  if (p != 4 && p != 8) throw InvalidArgument("beta exponent p must be 4 or 8, got " + std::to_string(p));
}

double ipow(double x, int p) {
  const double x2 = x * x;
  const double x4 = x2 * x2;
  return p == 4 ? x4 : x4 * x4;
}

// Ratio from projections; nullopt for directions orthogonal to the support.
struct RatioEvaluator {
  const Eigen::VectorXd& w;
  int p;
  double null_threshold;  // times |v|^2

  std::optional<double> operator()(const Eigen::VectorXd& proj, double v_norm_sq) const {
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < proj.size(); ++i) {
      const double y = proj(i);
      num += w(i) * ipow(y, p);
      den += w(i) * y * y;
    }
    if (!(den > null_threshold * v_norm_sq)) return std::nullopt;
    return std::pow(num, 1.0 / p) / std::sqrt(den);
  }
};

struct Candidate {
  Eigen::VectorXd v;
  double ratio;
};

// Coordinate ascent on the ratio, which is invariant under v -> c v.
Candidate refine(const Eigen::MatrixXd& x, const RatioEvaluator& eval, Candidate start,
                 std::size_t max_sweeps) {
  Eigen::VectorXd v = start.v.normalized();
  Eigen::VectorXd proj = x * v;
  double best = start.ratio;
  double h = 0.1;
  Eigen::VectorXd trial(proj.size());
  // the ratio is smooth, so a step of 1e-8 already pins it to ~1e-16
  for (std::size_t sweep = 0; sweep < max_sweeps && h > 1e-8; ++sweep) {
    bool improved = false;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      for (const double step : {h, -h}) {
        trial = proj + step * x.col(j);
        const double vj = v(j) + step;
        const double norm_sq = v.squaredNorm() - v(j) * v(j) + vj * vj;
        const auto r = eval(trial, norm_sq);
        if (r && *r > best) {
          best = *r;
          v(j) = vj;
          proj.swap(trial);
          improved = true;
          break;
        }
      }
    }
    const double norm = v.norm();
    v /= norm;
    proj /= norm;
    if (!improved) h *= 0.5;
  }
  return {v, best};
}

// Best ratio over the candidates, refining the strongest few. Ties keep the
// lowest candidate index.
Candidate search(const SampleSet& samples, int p, const std::vector<Eigen::VectorXd>& candidates,
                 double trace_b, const BetaOptions& options) {
  const Eigen::MatrixXd& x = samples.points();
  const RatioEvaluator eval{samples.weights(), p, kNullDirection * trace_b};
  std::vector<Candidate> scored;
  for (const auto& c : candidates) {
    const double n2 = c.squaredNorm();
    if (n2 == 0.0) continue;
    if (const auto r = eval(x * c, n2)) scored.push_back({c / std::sqrt(n2), *r});
  }
  if (scored.empty()) throw DegenerateMeasure("estimate_beta: no candidate direction meets the support");
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Candidate& a, const Candidate& b) { return a.ratio > b.ratio; });
  Candidate best = scored.front();
  const std::size_t top = std::min(options.refine_top, scored.size());
  for (std::size_t k = 0; k < top; ++k) {
    Candidate refined = refine(x, eval, scored[k], options.max_sweeps);
    if (refined.ratio > best.ratio) best = std::move(refined);
  }
  return best;
}

}  // namespace

SpectralChainSlacks check_spectral_chain(const MomentOperator& t, const SymMatrix& b, double lambda1) {
  if (t.dim() != b.dim()) throw DimensionError("check_spectral_chain: dimension mismatch");
  SpectralChainSlacks out;
  out.lambda1 = lambda1;
  out.above_average = lambda1 - t.trace() / static_cast<double>(t.dim());
  out.above_b_norm = lambda1 - b.frobenius_norm_sq();
  out.below_frobenius = std::sqrt(t.frobenius_norm_sq()) - lambda1;
  const double floor = -kSlackTolerance * std::abs(lambda1);
  const double worst = std::min({out.above_average, out.above_b_norm, out.below_frobenius});
  if (worst < floor) {
    throw InconsistentInputs("spectral chain violated: slacks (" + std::to_string(out.above_average) + ", " +
                             std::to_string(out.above_b_norm) + ", " + std::to_string(out.below_frobenius) +
                             ") with lambda_1 = " + std::to_string(lambda1));
  }
  return out;
}

SpectralChainSlacks check_spectral_chain(const MomentOperator& t, const SymMatrix& b) {
  return check_spectral_chain(t, b, leading_spectrum(t, 1).lambda(0));
}

double gap_statistic(double lambda1, double lambda2, double b_frob_sq) {
  if (!(lambda1 > 0.0)) {
    throw DegenerateMeasure("gap statistic needs lambda_1 > 0 (measure is the point mass at 0)");
  }
  auto clamp = [](double x) { return x < 0.0 && x >= -kSlackTolerance ? 0.0 : x; };
  return clamp(lambda2 / lambda1) + clamp(1.0 - b_frob_sq / lambda1);
}

double gap_statistic(const MomentOperator& t, const SymMatrix& b) {
  const Spectrum s = leading_spectrum(t, 2);
  return gap_statistic(s.lambda(0), s.eigenvalues.size() > 1 ? s.lambda(1) : 0.0, b.frobenius_norm_sq());
}

GapReport separation_bounds(const MomentOperator& t, const SymMatrix& b, const Spectrum& leading, double beta) {
  if (!(beta >= 1.0)) throw InvalidArgument("beta must be >= 1, got " + std::to_string(beta));
  GapReport r;
  r.lambda1 = leading.lambda(0);
  r.lambda2 = leading.eigenvalues.size() > 1 ? leading.lambda(1) : 0.0;
  r.b_frob_sq = b.frobenius_norm_sq();
  r.gamma = gap_statistic(r.lambda1, r.lambda2, r.b_frob_sq);
  r.s_upper_normalized_sq = 4.0 * r.gamma;
  const double b2 = beta * beta;
  const double b4 = b2 * b2;
  r.s_lower_normalized_sq = r.gamma * r.gamma * r.gamma / (200.0 * b4 * b4);
  r.beta_used = beta;
  r.trace_t = t.trace();
  r.slacks = check_spectral_chain(t, b, r.lambda1);
  return r;
}

GapReport separation_bounds(const MomentOperator& t, const SymMatrix& b, double beta) {
  return separation_bounds(t, b, leading_spectrum(t, 2), beta);
}

std::optional<double> beta_ratio(const SampleSet& samples, const Eigen::VectorXd& v, int p) {
  require_beta_p(p);
  if (v.size() != static_cast<Eigen::Index>(samples.dim())) throw DimensionError("beta_ratio: dimension mismatch");
  const double trace_b = second_moment(samples).trace();
  const RatioEvaluator eval{samples.weights(), p, kNullDirection * trace_b};
  return eval(samples.points() * v, v.squaredNorm());
}

SymMatrix whitening_map(const SymMatrix& b) { return matrix_sqrt_psd(pseudo_inverse_psd(b, 1e-12)); }

MomentOperator whitened_operator(const MomentOperator& t, const SymMatrix& b) {
  if (t.dim() != b.dim()) throw DimensionError("whitened_operator: dimension mismatch");
  const SymMatrix s = whitening_map(b);
  const MomentOperator congr =
      operator_from_action(b.dim(), [&](const SymMatrix& a) { return congruence(s, a); }, "congruence");
  const Eigen::MatrixXd& l = congr.matrix();
  return MomentOperator(t.dim(), l * t.matrix() * l, "whitened");
}

BetaEstimate estimate_beta(const SampleSet& samples, int p, std::size_t n_dirs, std::uint64_t seed,
                           const BetaOptions& options) {
  require_beta_p(p);
  const std::size_t d = samples.dim();
  const SymMatrix b = second_moment(samples);
  const double trace_b = b.trace();
  if (!(trace_b > 0.0)) throw DegenerateMeasure("estimate_beta: every point is at the origin");

  std::vector<Eigen::VectorXd> candidates;
  for (std::size_t i = 0; i < d; ++i) {
    candidates.push_back(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)));
  }
  const SmallSpectrum b_spec = eig_sym_small(b);
  for (Eigen::Index i = 0; i < b_spec.eigenvectors.cols(); ++i) candidates.push_back(b_spec.eigenvectors.col(i));

  BetaEstimate out;
  out.p = p;
  out.seed = seed;
  if (d <= options.dense_limit && sym_dim(d) <= kFullSolveLimit) {
    // sup_v ratio^4 = sup_u <T~(uu^T), uu^T> over unit u <= lambda_1(T~)
    const SymMatrix s = whitening_map(b);
    const MomentOperator tw = fourth_moment_operator(samples.transformed(s.to_dense()), {options.dense_limit, 0});
    const Spectrum lead = full_spectrum(tw);
    if (p == 4) out.certified_upper_p4 = std::pow(std::max(lead.lambda(0), 0.0), 0.25);
    const SmallSpectrum u = eig_sym_small(vech_iso_inv(lead.eigenvectors.col(0)));
    const Eigen::MatrixXd sd = s.to_dense();
    for (Eigen::Index i = 0; i < u.eigenvectors.cols(); ++i) {
      candidates.push_back(u.eigenvectors.col(i));
      candidates.push_back(sd * u.eigenvectors.col(i));
    }
  }
  Rng rng(seed);
  for (std::size_t k = 0; k < n_dirs; ++k) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
    candidates.push_back(v);
  }

  if (p == 8) {
    // ratio_8 >= ratio_4 pointwise, so the p = 4 optimum keeps lower_8 >= lower_4
    candidates.push_back(search(samples, 4, candidates, trace_b, options).v);
  }
  const Candidate best = search(samples, p, candidates, trace_b, options);
  out.lower = best.ratio;
  out.argmax = best.v;
  out.directions_tested = candidates.size();
  return out;
}

double beta_mixture_bound(const std::vector<double>& betas, const std::vector<double>& weights, int p) {
  if (betas.empty() || betas.size() != weights.size()) {
    throw InvalidArgument("beta_mixture_bound: need one weight per beta");
  }
  if (p < 2 || p % 2 != 0) throw InvalidArgument("beta_mixture_bound: p must be an even integer >= 2");
  double total = 0.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(weights[i] > 0.0)) throw InvalidArgument("beta_mixture_bound: weights must be positive");
    if (!(betas[i] >= 1.0)) throw InvalidArgument("beta_mixture_bound: betas must be >= 1");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("beta_mixture_bound: weights must sum to 1");
  const double beta = *std::max_element(betas.begin(), betas.end());
  // the exponent is negative, so the smallest weight gives the largest factor
  const double alpha = *std::min_element(weights.begin(), weights.end());
  return beta * std::pow(alpha, 1.0 / p - 0.5);
}

UnequalBounds unequal_weight_bounds(double s_value, double alpha) {
  if (!(alpha > 0.0 && alpha <= 0.5)) throw InvalidArgument("alpha must lie in (0, 1/2]");
  if (!(s_value >= 0.0)) throw InvalidArgument("s must be nonnegative");
  return {alpha, s_value / (2.0 * (1.0 - alpha)), s_value / (2.0 * alpha)};
}

}  // namespace momspec
