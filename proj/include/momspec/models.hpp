#pragma once

// Model families with closed-form moments, and seeded samplers for them.
// Every family here is centrally symmetric (x and -x equally likely), so all
// odd moments vanish; the lifted family relies on that.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "momspec/moments.hpp"
#include "momspec/symspace.hpp"

namespace momspec {

class AnalyticModel {
 public:
  struct Gaussian {
    SymMatrix covariance;
  };
  /// i.i.d. coordinates, E X^2 = 1, E X^4 = m4.
  struct Iid {
    std::size_t dim;
    double m4;
  };
  struct ProjectionMixture {
    SymMatrix projection;
  };
  struct DiscreteAxes {
    std::size_t dim;
  };
  struct Sphere {
    std::size_t dim;
  };
  struct Dirac {
    Eigen::VectorXd point;
  };
  struct Scaled {
    std::shared_ptr<const AnalyticModel> inner;
    double factor;
  };
  struct Mixture {
    std::vector<AnalyticModel> components;
    std::vector<double> weights;
  };
  struct Lifted {
    std::shared_ptr<const AnalyticModel> inner;
    double shift;
  };
  using Family =
      std::variant<Gaussian, Iid, ProjectionMixture, DiscreteAxes, Sphere, Dirac, Scaled, Mixture, Lifted>;

  static AnalyticModel gaussian(SymMatrix covariance);
  static AnalyticModel iid(std::size_t dim, double m4);
  /// Uniform on [-sqrt 3, sqrt 3]^d, an i.i.d. family with m4 = 9/5.
  static AnalyticModel iid_cube(std::size_t dim) { return iid(dim, 9.0 / 5.0); }
  static AnalyticModel projection_mixture(SymMatrix projection);
  /// Projection onto the first d/2 coordinates.
  static AnalyticModel projection_mixture(std::size_t dim);
  static AnalyticModel discrete_axes(std::size_t dim);
  static AnalyticModel sphere(std::size_t dim);
  static AnalyticModel dirac(Eigen::VectorXd point);
  static AnalyticModel scaled(AnalyticModel inner, double factor);
  static AnalyticModel mixture(std::vector<AnalyticModel> components, std::vector<double> weights);
  static AnalyticModel lifted(AnalyticModel inner, double shift);

  const Family& family() const { return family_; }
  std::size_t dim() const;
  /// Short human-readable description, e.g. "mixture(gaussian(d=4), dirac(d=4))".
  std::string describe() const;

 private:
  explicit AnalyticModel(Family family) : family_(std::move(family)) {}
  Family family_;
};

MomentOperator analytic_operator(const AnalyticModel& model);
SymMatrix analytic_second_moment(const AnalyticModel& model);

/// Samples with the index of the mixture component each point came from
/// (0 for non-mixture families).
struct LabeledSamples {
  SampleSet samples;
  std::vector<std::size_t> labels;
};

/// n i.i.d. draws from the model, deterministic in (model, n, seed). The
/// discrete-axes family is enumerated exactly instead (its 2d atoms, uniform
/// weights), and a Dirac model yields n copies of its point.
LabeledSamples sample_labeled(const AnalyticModel& model, std::size_t n, std::uint64_t seed);
SampleSet sample(const AnalyticModel& model, std::size_t n, std::uint64_t seed);

}  // namespace momspec
