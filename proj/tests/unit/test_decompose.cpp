#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "momspec/decompose.hpp"
#include "momspec/diagnostics.hpp"
#include "momspec/error.hpp"
#include "momspec/models.hpp"
#include "momspec/moments.hpp"
#include "momspec/oracle.hpp"

using namespace momspec;

namespace {

// Each direction of a weighted spherical 4-design in R^6 at radius 1 and 2.
// Axes carry total weight 1/4 and cube vertices 3/4, which makes
// E u_1^4 = 3 E u_1^2 u_2^2, so the centered operator is isotropic on
// traceless matrices and its top eigenvector is exactly I / sqrt(6).
SampleSet two_radius_design() {
  std::vector<Eigen::VectorXd> dirs;
  std::vector<double> wdir;
  for (int i = 0; i < 6; ++i) {
    for (const double s : {1.0, -1.0}) {
      dirs.push_back(s * Eigen::VectorXd::Unit(6, i));
      wdir.push_back(0.25 / 12.0);
    }
  }
  for (int mask = 0; mask < 64; ++mask) {
    Eigen::VectorXd v(6);
    for (int i = 0; i < 6; ++i) v(i) = ((mask >> i) & 1) != 0 ? 1.0 : -1.0;
    dirs.push_back(v / std::sqrt(6.0));
    wdir.push_back(0.75 / 64.0);
  }
  const auto n = static_cast<Eigen::Index>(2 * dirs.size());
  Eigen::MatrixXd x(n, 6);
  Eigen::VectorXd w(n);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    for (int r = 0; r < 2; ++r) {
      const auto row = static_cast<Eigen::Index>(2 * k + r);
      x.row(row) = (r + 1.0) * dirs[k].transpose();
      w(row) = 0.5 * wdir[k];
    }
  }
  return SampleSet(x, w / w.sum());
}

void check_split_invariants(const SampleSet& s, const Decomposition& dec) {
  CHECK(std::abs(dec.mass1.sum() - 1.0) <= 1e-12);
  CHECK(std::abs(dec.mass2.sum() - 1.0) <= 1e-12);
  CHECK(dec.mass1.minCoeff() >= 0.0);
  CHECK(dec.mass2.minCoeff() >= 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    CHECK(std::abs(0.5 * dec.mass1(k) + 0.5 * dec.mass2(k) - s.weight(i)) <= 1e-15);
  }
  CHECK(dec.alpha >= 0.0);
  CHECK(dec.alpha <= 1.0);
  CHECK(std::abs(dec.f_gap - dec.median_deviation) <= 1e-10 * std::max(1.0, dec.median_deviation));
  CHECK(dec.achieved >= dec.median_deviation - 1e-9);
  CHECK(dec.achieved == doctest::Approx(0.5 * (dec.m1 - dec.m2).frobenius_norm()).epsilon(1e-14));
}

double label_agreement(const Decomposition& dec, const std::vector<std::size_t>& labels) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const std::size_t side = dec.mass1(k) > dec.mass2(k) ? 0 : 1;
    same += side == labels[i] ? 1 : 0;
  }
  const double frac = static_cast<double>(same) / static_cast<double>(labels.size());
  return std::max(frac, 1.0 - frac);
}

}  // namespace

TEST_SUITE("decompose") {
  TEST_CASE("leading_direction on the projection mixture") {
    const AnalyticModel pm = AnalyticModel::projection_mixture(8);
    const MomentOperator t = analytic_operator(pm);
    const SymMatrix b = analytic_second_moment(pm);
    const LeadingDirection ld = leading_direction(t, b);
    CHECK(ld.a.frobenius_norm() == doctest::Approx(1.0).epsilon(1e-12));
    const MomentOperator c = centered_operator(t, b);
    const double top = full_spectrum(c).lambda(0);
    CHECK(c.quadratic_form(ld.a) >= top * (1.0 - 1e-8));
    CHECK(ld.lambda1 == doctest::Approx(top).epsilon(1e-12));
  }

  TEST_CASE("leading_direction of a point mass is degenerate") {
    const SampleSet s = testing::points({{0.3, -1.0, 2.0}});
    const LeadingDirection ld = leading_direction(fourth_moment_operator(s), second_moment(s));
    CHECK(ld.degenerate);
    CHECK(ld.a.frobenius_norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ld.lambda1 == 0.0);
  }

  TEST_CASE("leading_direction finds the radial statistic") {
    const SampleSet s = two_radius_design();
    const MomentOperator t = fourth_moment_operator(s);
    const SymMatrix b = second_moment(s);
    const LeadingDirection ld = leading_direction(t, b);
    const SymMatrix iso = SymMatrix::identity(6) * (1.0 / std::sqrt(6.0));
    const double dist = std::min((ld.a - iso).frobenius_norm(), (ld.a + iso).frobenius_norm());
    CHECK(dist <= 0.1);
    CHECK(ld.lambda1 == doctest::Approx(2.25 / 6.0).epsilon(1e-12));
    CHECK(ld.lambda2 == doctest::Approx(8.5 * 2.0 / 48.0).epsilon(1e-12));
    // no unit A beats the eigenvector
    const MomentOperator c = centered_operator(t, b);
    for (std::uint64_t k = 0; k < 200; ++k) {
      SymMatrix a = testing::random_sym(6, 1100 + k);
      a *= 1.0 / a.frobenius_norm();
      CHECK(c.quadratic_form(a) <= ld.lambda1 * (1.0 + 1e-12));
    }
  }

  TEST_CASE("leading_direction rejects mismatched inputs") {
    const SampleSet s = testing::gaussian_samples(30, 3, 1200);
    CHECK_THROWS_AS(leading_direction(fourth_moment_operator(s), second_moment(s) * 3.0), InconsistentInputs);
  }

  TEST_CASE("median_split examples") {
    const SampleSet two = testing::points({{1.0}, {2.0}});
    const Decomposition d2 = median_split(two, SymMatrix::identity(1));
    CHECK(d2.achieved == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(d2.b0 == 4.0);
    check_split_invariants(two, d2);

    const SampleSet four = testing::points({{1.0}, {1.0}, {1.0}, {std::sqrt(3.0)}});
    const Decomposition d4 = median_split(four, SymMatrix::identity(1));
    CHECK(d4.b0 == 1.0);
    CHECK(d4.alpha == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(d4.mass1(3) == doctest::Approx(0.5).epsilon(1e-15));
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(d4.mass1(i) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    check_split_invariants(four, d4);

    CHECK_THROWS_AS(median_split(two, SymMatrix::identity(1) * 2.0), InvalidArgument);
  }

  TEST_CASE("split invariants on random weighted sets") {
    for (std::uint64_t k = 0; k < 30; ++k) {
      const std::size_t d = 1 + k % 5;
      const SampleSet s = k % 2 == 0 ? testing::weighted_samples(7 + k, d, 1300 + k)
                                     : testing::gaussian_samples(7 + k, d, 1300 + k);
      SymMatrix a = testing::random_sym(d, 1400 + k);
      a *= 1.0 / a.frobenius_norm();
      check_split_invariants(s, median_split(s, a));
      const Decomposition full = run_decomposition(s, 1.0);
      check_split_invariants(s, full);
    }
  }

  TEST_CASE("ties are handled by exact mass accounting") {
    // every f is equal, so the whole set is one tie class
    const SampleSet ring = testing::axes(3);
    const Decomposition dec = median_split(ring, SymMatrix::identity(3) * (1.0 / std::sqrt(3.0)));
    CHECK(dec.alpha == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(dec.achieved <= 1e-15);
    check_split_invariants(ring, dec);
  }

  TEST_CASE("guarantee_lower_bound") {
    CHECK(guarantee_lower_bound(0.0, 3.0, 1.0) == 0.0);
    const double g = 4.0 / 3.0;
    CHECK(guarantee_lower_bound(g, std::sqrt(2.0), 2.0) ==
          doctest::Approx(std::sqrt(2.0) * std::sqrt(g * g * g / (200.0 * 256.0))).epsilon(1e-14));
    CHECK(guarantee_lower_bound(g, std::sqrt(2.0), 2.0) == doctest::Approx(0.0096).epsilon(0.02));
    const AnalyticModel pm = AnalyticModel::projection_mixture(8);
    CHECK(guarantee_lower_bound(analytic_operator(pm), analytic_second_moment(pm), 2.0) ==
          doctest::Approx(guarantee_lower_bound(g, std::sqrt(2.0), 2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(guarantee_lower_bound(g, 1.0, 0.5), InvalidArgument);
  }

  TEST_CASE("guarantee and supremum bracket the split on oracle instances") {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const std::size_t d = 1 + k % 3;
      const std::size_t n = 4 + 2 * (k % 4);
      const SampleSet s = testing::gaussian_samples(n, d, 1500 + k);
      const double beta = beta_exact_small(s, 8).value * 1.01;
      const Decomposition dec = run_decomposition(s, beta, BetaSource::oracle);
      CHECK(dec.achieved >= dec.guarantee - 1e-9);
      CHECK(std::pow(dec.achieved / dec.b_frob, 2) >= std::pow(dec.gamma, 3) / (200.0 * std::pow(beta, 8)) - 1e-9);
      CHECK(dec.achieved <= s_exact_small(s).value + 1e-9);
      CHECK(dec.beta_source == BetaSource::oracle);
      CHECK(dec.beta == beta);
    }
  }

  TEST_CASE("orthogonal equivariance") {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const std::size_t d = 2 + k % 4;
      const SampleSet s = testing::weighted_samples(25, d, 1600 + k);
      const Eigen::MatrixXd q = testing::random_orthogonal(d, 1700 + k);
      const Decomposition a = run_decomposition(s, 1.0);
      const Decomposition b = run_decomposition(s.transformed(q), 1.0);
      CHECK(b.achieved == doctest::Approx(a.achieved).epsilon(1e-9));
      CHECK(b.gamma == doctest::Approx(a.gamma).epsilon(1e-9));
      CHECK(b.b_frob == doctest::Approx(a.b_frob).epsilon(1e-9));
    }
  }

  TEST_CASE("projection mixture recovers the components") {
    const LabeledSamples ls = sample_labeled(AnalyticModel::projection_mixture(8), 20000, 31);
    const Decomposition dec = run_decomposition(ls.samples, 1.0);
    const double normalized = dec.achieved / dec.b_frob;
    CHECK(normalized >= 0.8);
    CHECK(normalized <= 1.0);
    CHECK(label_agreement(dec, ls.labels) >= 0.9);
    check_split_invariants(ls.samples, dec);
  }

  TEST_CASE("near point mass gives a near-zero split") {
    Eigen::MatrixXd x = testing::gaussian_matrix(40, 3, 1800) * 1e-7;
    x.col(0).array() += 1.0;
    const Decomposition dec = run_decomposition(SampleSet(x), 1.0);
    CHECK(dec.achieved <= 1e-5);
    CHECK(dec.guarantee <= 1e-5);
    CHECK(dec.gamma <= 1e-5);
  }

  TEST_CASE("hypercube split respects both bounds") {
    const SampleSet s = sample(AnalyticModel::iid_cube(6), 50000, 41);
    const double beta = estimate_beta(s, 8, 64, 1).lower;
    const Decomposition dec = run_decomposition(s, beta, BetaSource::estimated);
    CHECK(dec.achieved >= dec.guarantee);
    CHECK(dec.achieved / dec.b_frob <= std::sqrt(4.0 * 14.0 / 34.0));
    CHECK(dec.gamma == doctest::Approx(14.0 / 34.0).epsilon(0.05));
  }
}
