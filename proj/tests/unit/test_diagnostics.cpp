#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "momspec/diagnostics.hpp"
#include "momspec/error.hpp"
#include "momspec/models.hpp"
#include "momspec/moments.hpp"
#include "momspec/oracle.hpp"

using namespace momspec;

namespace {

GapReport analytic_report(const AnalyticModel& m, double beta) {
  return separation_bounds(analytic_operator(m), analytic_second_moment(m), beta);
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("spectral chain slacks") {
    const SpectralChainSlacks g = check_spectral_chain(analytic_iid(5, 3.0), SymMatrix::identity(5));
    CHECK(g.lambda1 == doctest::Approx(7.0).epsilon(1e-13));
    CHECK(std::abs(g.above_average) <= 1e-12);
    CHECK(g.above_b_norm == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(g.below_frobenius == doctest::Approx(std::sqrt(105.0) - 7.0).epsilon(1e-12));

    const SampleSet e1 = testing::points({{1.0, 0.0, 0.0, 0.0}});
    const SpectralChainSlacks r1 = check_spectral_chain(fourth_moment_operator(e1), second_moment(e1));
    CHECK(r1.above_average == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(std::abs(r1.above_b_norm) <= 1e-15);
    CHECK(std::abs(r1.below_frobenius) <= 1e-15);

    for (std::uint64_t k = 0; k < 100; ++k) {
      const std::size_t d = 1 + k % 8;
      const SampleSet s = testing::weighted_samples(5 + k % 30, d, 700 + k);
      const SpectralChainSlacks sl = check_spectral_chain(fourth_moment_operator(s), second_moment(s));
      CHECK(sl.above_average >= -1e-10);
      CHECK(sl.above_b_norm >= -1e-10);
      CHECK(sl.below_frobenius >= -1e-10);
    }
  }

  TEST_CASE("spectral chain rejects mismatched inputs") {
    const SampleSet s = testing::gaussian_samples(40, 3, 710);
    CHECK_THROWS_AS(check_spectral_chain(fourth_moment_operator(s), second_moment(s) * 2.0), InconsistentInputs);
    CHECK_THROWS_AS(check_spectral_chain(analytic_iid(3, 3.0), SymMatrix::identity(2)), DimensionError);
  }

  TEST_CASE("gap statistic fixtures") {
    CHECK(gap_statistic(analytic_sphere(30), SymMatrix::identity(30) * (1.0 / 30.0)) ==
          doctest::Approx(0.0625).epsilon(1e-12));
    CHECK(gap_statistic(analytic_iid(10, 1.8), SymMatrix::identity(10)) == doctest::Approx(14.0 / 54.0).epsilon(1e-12));
    const AnalyticModel pm = AnalyticModel::projection_mixture(8);
    CHECK(gap_statistic(analytic_operator(pm), analytic_second_moment(pm)) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(gap_statistic(0.0, 0.0, 0.0), DegenerateMeasure);
    CHECK(gap_statistic(1.0, 0.0, 1.0 + 1e-10) == 0.0);
  }

  TEST_CASE("separation bounds") {
    const GapReport pm = analytic_report(AnalyticModel::projection_mixture(8), 1.0);
    CHECK(pm.s_lower_normalized_sq == doctest::Approx(std::pow(4.0 / 3.0, 3) / 200.0).epsilon(1e-12));
    CHECK(pm.s_upper_normalized_sq == doctest::Approx(16.0 / 3.0).epsilon(1e-12));
    CHECK(pm.s_lower_normalized_sq <= 1.0);
    CHECK(1.0 <= pm.s_upper_normalized_sq);

    const GapReport sph = analytic_report(AnalyticModel::sphere(30), 1.0);
    CHECK(sph.s_upper_normalized_sq <= 0.25 + 1e-12);

    const AnalyticModel d0 = AnalyticModel::mixture(
        {AnalyticModel::gaussian(SymMatrix::identity(10) * std::sqrt(2.0)), AnalyticModel::dirac(Eigen::VectorXd::Zero(10))},
        {0.5, 0.5});
    const GapReport rd = analytic_report(d0, 1.0);
    CHECK(rd.gamma == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(rd.s_upper_normalized_sq == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(1.0 <= rd.s_upper_normalized_sq);
    CHECK(rd.trace_t == doctest::Approx(analytic_operator(d0).trace()).epsilon(1e-15));

    CHECK_THROWS_AS(analytic_report(AnalyticModel::sphere(3), 0.9), InvalidArgument);
  }

  TEST_CASE("separation bounds bracket the exact value on small instances") {
    for (std::uint64_t k = 0; k < 12; ++k) {
      const std::size_t d = 1 + k % 3;
      const std::size_t n = 4 + 2 * (k % 5);
      const SampleSet s = testing::gaussian_samples(n, d, 800 + k);
      const MomentOperator t = fourth_moment_operator(s);
      const SymMatrix b = second_moment(s);
      const double beta = beta_exact_small(s, 8).value;
      const GapReport r = separation_bounds(t, b, beta);
      const double exact = s_exact_small(s).value;
      const double norm_sq = std::pow(exact, 2) / r.b_frob_sq;
      CHECK(r.s_lower_normalized_sq - 1e-9 <= norm_sq);
      CHECK(norm_sq <= r.s_upper_normalized_sq + 1e-9);
      CHECK(exact <= 2.0 * std::sqrt(r.b_frob_sq * r.gamma) + 1e-12);
      CHECK(exact <= std::sqrt(r.b_frob_sq) + 1e-12);
    }
  }

  TEST_CASE("beta examples") {
    for (const std::size_t d : {2u, 3u, 5u}) {
      const BetaEstimate e = estimate_beta(testing::axes(d), 4, 32, 1);
      CHECK(e.lower == doctest::Approx(std::pow(static_cast<double>(d), 0.25)).epsilon(1e-12));
      REQUIRE(e.certified_upper_p4.has_value());
      CHECK(*e.certified_upper_p4 >= e.lower - 1e-9);
    }

    const SampleSet line = testing::points({{1.0, 0.0}, {-1.0, 0.0}});
    const BetaEstimate e8 = estimate_beta(line, 8, 16, 2);
    CHECK(e8.lower == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(beta_ratio(line, Eigen::Vector2d(0.3, 0.7), 8).value() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(beta_ratio(line, Eigen::Vector2d(0.0, 1.0), 8).has_value());

    const SampleSet g = testing::gaussian_samples(100000, 3, 3);
    const BetaEstimate eg = estimate_beta(g, 4, 64, 4);
    const double grid = beta_exact_small(g, 4).value;
    CHECK(eg.lower >= 1.2);
    CHECK(eg.lower <= std::sqrt(3.0) * 1.1);
    CHECK(std::abs(eg.lower - grid) <= 0.02 * grid);
    CHECK(eg.lower == doctest::Approx(std::pow(3.0, 0.25)).epsilon(0.05));

    CHECK_THROWS_AS(estimate_beta(line, 6, 4, 1), InvalidArgument);
    CHECK_THROWS_AS(estimate_beta(testing::points({{0.0, 0.0}}), 4, 4, 1), DegenerateMeasure);
  }

  TEST_CASE("beta lower bound is at least one on the support") {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const SampleSet s = testing::weighted_samples(20, 2 + k % 4, 900 + k);
      CHECK(estimate_beta(s, 4, 16, k).lower >= 1.0 - 1e-12);
    }
  }

  TEST_CASE("beta is monotone in p") {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const SampleSet s = testing::weighted_samples(30, 2 + k % 5, 910 + k);
      CHECK(estimate_beta(s, 8, 32, k).lower >= estimate_beta(s, 4, 32, k).lower - 1e-12);
    }
  }

  TEST_CASE("certified p=4 bound dominates the lower estimate") {
    for (std::uint64_t k = 0; k < 50; ++k) {
      const std::size_t d = 2 + k % 6;
      const SampleSet s = k % 3 == 0 ? testing::gaussian_samples(8 + k, d, 920 + k) : testing::weighted_samples(8 + k, d, 920 + k);
      const BetaEstimate e = estimate_beta(s, 4, 32, k);
      REQUIRE(e.certified_upper_p4.has_value());
      CHECK(std::pow(e.lower, 4) <= std::pow(*e.certified_upper_p4, 4) * (1.0 + 1e-9));
      CHECK(e.argmax.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(beta_ratio(s, e.argmax, 4).value() == doctest::Approx(e.lower).epsilon(1e-12));
    }
  }

  TEST_CASE("estimate_beta is deterministic in the seed") {
    const SampleSet s = testing::gaussian_samples(200, 4, 930);
    const BetaEstimate a = estimate_beta(s, 8, 64, 5);
    const BetaEstimate b = estimate_beta(s, 8, 64, 5);
    CHECK(a.lower == b.lower);
    CHECK(a.directions_tested == b.directions_tested);
    CHECK_FALSE(a.certified_upper_p4.has_value());
  }

  TEST_CASE("whitened operator routes agree") {
    for (std::uint64_t k = 0; k < 5; ++k) {
      const SampleSet s = testing::weighted_samples(30, 3 + k % 3, 940 + k);
      const SymMatrix b = second_moment(s);
      const MomentOperator via_op = whitened_operator(fourth_moment_operator(s), b);
      const MomentOperator via_samples = fourth_moment_operator(s.transformed(whitening_map(b).to_dense()));
      CHECK((via_op.matrix() - via_samples.matrix()).cwiseAbs().maxCoeff() <=
            1e-9 * via_samples.matrix().cwiseAbs().maxCoeff());
    }
  }

  TEST_CASE("whitening ignores directions outside the support") {
    const SampleSet flat = testing::gaussian_samples(30, 2, 950).transformed(
        (Eigen::MatrixXd(3, 2) << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0).finished());
    const BetaEstimate e = estimate_beta(flat, 4, 16, 1);
    REQUIRE(e.certified_upper_p4.has_value());
    CHECK(e.lower <= *e.certified_upper_p4 + 1e-9);
    CHECK(e.lower >= 1.0);
    // the ratio cannot see the null coordinate, so dropping it changes nothing
    Eigen::VectorXd v = e.argmax;
    v(2) = 0.0;
    CHECK(beta_ratio(flat, v, 4).value() == doctest::Approx(e.lower).epsilon(1e-12));
  }

  TEST_CASE("beta_mixture_bound") {
    CHECK(beta_mixture_bound({1.7}, {1.0}, 4) == doctest::Approx(1.7).epsilon(1e-15));
    CHECK(beta_mixture_bound({1.0, 1.0}, {0.5, 0.5}, 4) == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-15));
    CHECK(beta_mixture_bound({1.0, 1.3}, {0.1, 0.9}, 8) == doctest::Approx(1.3 * std::pow(0.1, -3.0 / 8.0)).epsilon(1e-15));
    CHECK_THROWS_AS(beta_mixture_bound({1.0, 1.0}, {0.5, 0.4}, 4), InvalidArgument);
    CHECK_THROWS_AS(beta_mixture_bound({1.0}, {1.0, 0.0}, 4), InvalidArgument);
    CHECK_THROWS_AS(beta_mixture_bound({0.5}, {1.0}, 4), InvalidArgument);
  }

  TEST_CASE("beta_mixture_bound holds for an empirical mixture") {
    const SampleSet a = testing::gaussian_samples(200, 2, 960);
    const SampleSet b = testing::gaussian_samples(200, 2, 961).scaled(3.0);
    const double ba = beta_exact_small(a, 4).value;
    const double bb = beta_exact_small(b, 4).value;
    const SampleSet mix = pool({{0.3, a}, {0.7, b}});
    CHECK(beta_exact_small(mix, 4).value <= beta_mixture_bound({ba, bb}, {0.3, 0.7}, 4) + 1e-9);
  }

  TEST_CASE("unequal_weight_bounds") {
    const UnequalBounds half = unequal_weight_bounds(1.3, 0.5);
    CHECK(half.lower == doctest::Approx(1.3).epsilon(1e-15));
    CHECK(half.upper == doctest::Approx(1.3).epsilon(1e-15));
    const UnequalBounds q = unequal_weight_bounds(1.0, 0.25);
    CHECK(q.lower == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(q.upper == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(unequal_weight_bounds(1.0, 0.6), InvalidArgument);
    CHECK_THROWS_AS(unequal_weight_bounds(1.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(unequal_weight_bounds(-1.0, 0.3), InvalidArgument);
  }

  TEST_CASE("unequal_weight_bounds bracket the exact weighted value") {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const SampleSet s = testing::gaussian_samples(8, 2, 970 + k);
      const double s_half = s_exact_small(s).value;
      const UnequalBounds bounds = unequal_weight_bounds(s_half, 0.25);
      const double weighted = s_weighted_exact_small(s, 0.25).value;
      CHECK(bounds.lower <= weighted + 1e-12);
      CHECK(weighted <= bounds.upper + 1e-12);
    }
  }
}
