#include "momspec/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <vector>

#include <CLI11.hpp>

#include "momspec/cli/csv.hpp"
#include "momspec/cli/report.hpp"
#include "momspec/decompose.hpp"
#include "momspec/diagnostics.hpp"
#include "momspec/oracle.hpp"
#include "momspec/rng.hpp"
#include "momspec/spectra.hpp"

namespace momspec::cli {

namespace {

using Clock = std::chrono::steady_clock;

class Timings {
 public:
  void mark(std::string name) {
    const auto now = Clock::now();
    entries_.emplace_back(std::move(name), std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }
  void write(JsonWriter& w) const {
    w.key("timings").begin_object();
    double total = 0.0;
    for (const auto& [name, seconds] : entries_) {
      w.field(name + "_s", seconds);
      total += seconds;
    }
    w.field("total_s", total).end_object();
  }

 private:
  Clock::time_point last_ = Clock::now();
  std::vector<std::pair<std::string, double>> entries_;
};

struct Data {
  std::optional<AnalyticModel> model;
  std::optional<LabeledSamples> labeled;  // absent for --analytic
  std::string source;

  const SampleSet& samples() const { return labeled->samples; }
};

void require_source(const RunConfig& cfg) {
  if (cfg.input && cfg.model) throw UsageError("--input and --model are mutually exclusive");
  if (!cfg.input && !cfg.model) throw UsageError("one of --input or --model is required");
  if (cfg.analytic && !cfg.model) throw UsageError("--analytic needs --model");
}

Data load(const RunConfig& cfg, bool allow_analytic) {
  require_source(cfg);
  Data data;
  if (cfg.input) {
    data.labeled = LabeledSamples{read_csv(*cfg.input), {}};
    data.source = "input";
    return data;
  }
  data.model = model_from_name(*cfg.model, cfg.d, cfg.m4);
  if (cfg.analytic) {
    if (!allow_analytic) throw UsageError("--analytic is not available for " + cfg.subcommand);
    data.source = "analytic";
    return data;
  }
  if (cfg.n < 1) throw UsageError("--n must be >= 1");
  data.labeled = sample_labeled(*data.model, cfg.n, cfg.seed);
  data.source = "model";
  return data;
}

void write_preamble(JsonWriter& w, const RunConfig& cfg) {
  w.field("schema", kSchema);
  w.key("tool").begin_object().field("name", kToolName).field("version", kToolVersion).end_object();
  w.key("config").begin_object();
  w.field("subcommand", cfg.subcommand);
  w.field("input", cfg.input);
  w.field("model", cfg.model);
  w.field("d", static_cast<std::uint64_t>(cfg.d));
  w.field("n", static_cast<std::uint64_t>(cfg.n));
  w.field("m4", cfg.m4);
  w.field("p", cfg.p);
  w.field("beta", cfg.beta);
  w.field("seed", cfg.seed);
  w.field("rng", Rng::kAlgorithm);
  w.field("analytic", cfg.analytic);
  w.field("dense_limit", static_cast<std::uint64_t>(cfg.dense_limit));
  w.key("top_k");
  if (cfg.top_k) {
    w.value(static_cast<std::uint64_t>(*cfg.top_k));
  } else {
    w.null();
  }
  w.field("full_spectrum", cfg.full_spectrum);
  w.field("n_dirs", static_cast<std::uint64_t>(cfg.n_dirs));
  w.end_object();
}

void write_data(JsonWriter& w, const Data& data, std::size_t d) {
  w.key("data").begin_object();
  w.field("source", data.source);
  w.field("description", data.model ? data.model->describe() : std::string("csv"));
  w.field("d", static_cast<std::uint64_t>(d));
  w.field("coord_dim", static_cast<std::uint64_t>(sym_dim(d)));
  w.key("n");
  if (data.labeled) {
    w.value(static_cast<std::uint64_t>(data.samples().size()));
  } else {
    w.null();
  }
  w.end_object();
}

// Spectrum plus the scalars the reports need, from whichever path fits.
struct Analysis {
  SymMatrix b;
  std::optional<MomentOperator> t;
  Spectrum spectrum;
  std::string method;
  double trace = 0.0;
  std::optional<double> frobenius;
};

Analysis analyze_moments(const RunConfig& cfg, const Data& data, Timings& timings) {
  Analysis a;
  if (!data.labeled) {
    a.t = analytic_operator(*data.model);
    a.b = analytic_second_moment(*data.model);
  } else {
    const SampleSet& s = data.samples();
    a.b = second_moment(s);
    if (s.dim() > cfg.dense_limit) {
      if (!cfg.top_k) {
        throw CapacityError("d = " + std::to_string(s.dim()) + " exceeds the dense limit " +
                            std::to_string(cfg.dense_limit) +
                            "; pass --top-k K for the matrix-free path or raise --dense-limit");
      }
      timings.mark("moments");
      a.spectrum = top_eigens_matrix_free(s, std::min(*cfg.top_k, sym_dim(s.dim())));
      a.method = "matrix-free-power";
      const Eigen::VectorXd norms = s.points().rowwise().squaredNorm();
      a.trace = s.weights().dot(norms.cwiseProduct(norms));
      timings.mark("spectrum");
      return a;
    }
    a.t = fourth_moment_operator(s, {cfg.dense_limit, 0});
  }
  timings.mark("moments");
  const MomentOperator& t = *a.t;
  if (cfg.top_k) {
    a.spectrum = top_eigens(t, std::min(*cfg.top_k, t.coord_dim()));
    a.method = "power";
  } else if (cfg.full_spectrum || t.coord_dim() <= kFullSolveLimit) {
    a.spectrum = full_spectrum(t);
    a.method = "dense";
  } else {
    a.spectrum = top_eigens(t, kDefaultReportedEigenvalues);
    a.method = "power";
  }
  a.trace = t.trace();
  a.frobenius = std::sqrt(t.frobenius_norm_sq());
  timings.mark("spectrum");
  return a;
}

double lambda_at(const Spectrum& s, Eigen::Index i) { return i < s.eigenvalues.size() ? s.eigenvalues(i) : 0.0; }

void write_spectrum(JsonWriter& w, const Analysis& a, std::size_t listed) {
  const Eigen::Index count = std::min<Eigen::Index>(static_cast<Eigen::Index>(listed), a.spectrum.eigenvalues.size());
  w.key("spectrum").begin_object();
  w.field("method", a.method);
  w.field("coord_dim", static_cast<std::uint64_t>(sym_dim(a.b.dim())));
  w.field("eigenvalues", Eigen::VectorXd(a.spectrum.eigenvalues.head(count)));
  w.field("trace", a.trace);
  w.field("frobenius_norm", a.frobenius);
  w.field("degenerate", a.spectrum.degenerate);
  w.end_object();
}

struct BetaChoice {
  std::optional<BetaEstimate> estimate;
  std::optional<double> beta;
  std::string kind;  // "user", "heuristic" or "none"
};

BetaChoice choose_beta(const RunConfig& cfg, const Data& data) {
  BetaChoice c;
  if (data.labeled && second_moment(data.samples()).trace() > 0.0) {
    BetaOptions options;
    options.dense_limit = cfg.dense_limit;
    c.estimate = estimate_beta(data.samples(), cfg.p, cfg.n_dirs, cfg.seed, options);
  }
  if (cfg.beta) {
    if (!(*cfg.beta >= 1.0)) throw UsageError("--beta must be >= 1");
    c.beta = cfg.beta;
    c.kind = "user";
  } else if (c.estimate) {
    c.beta = std::max(1.0, c.estimate->lower);
    c.kind = "heuristic";
  } else {
    c.kind = "none";
  }
  return c;
}

void write_beta(JsonWriter& w, const BetaChoice& c) {
  w.key("beta");
  if (!c.estimate) {
    w.null();
    return;
  }
  const BetaEstimate& e = *c.estimate;
  w.begin_object();
  w.field("p", e.p);
  w.field("lower", e.lower);
  w.field("certified_upper_p4", e.certified_upper_p4);
  w.field("directions_tested", static_cast<std::uint64_t>(e.directions_tested));
  w.field("seed", e.seed);
  w.field("argmax", e.argmax);
  w.end_object();
}

void write_analysis(JsonWriter& w, const RunConfig& cfg, const Data& data, const Analysis& a,
                    const BetaChoice& beta) {
  const double lambda1 = lambda_at(a.spectrum, 0);
  const double lambda2 = lambda_at(a.spectrum, 1);
  const double b_frob_sq = a.b.frobenius_norm_sq();

  w.key("second_moment").begin_object();
  w.field("trace", a.b.trace());
  w.field("frobenius_norm_sq", b_frob_sq);
  w.end_object();

  w.key("spectral_chain");
  if (a.t) {
    const SpectralChainSlacks s = check_spectral_chain(*a.t, a.b, lambda1);
    w.begin_object();
    w.field("above_average", s.above_average);
    w.field("above_b_norm", s.above_b_norm);
    w.field("below_frobenius", s.below_frobenius);
    w.end_object();
  } else {
    w.null();
  }

  w.key("gap");
  if (lambda1 > 0.0) {
    const double gamma = gap_statistic(lambda1, lambda2, b_frob_sq);
    w.begin_object();
    w.field("lambda1", lambda1);
    w.field("lambda2", lambda2);
    w.field("b_frob_sq", b_frob_sq);
    w.field("gamma", gamma);
    w.field("s_upper_normalized_sq", 4.0 * gamma);
    w.field("s_upper", 2.0 * std::sqrt(b_frob_sq * gamma));
    if (beta.beta) {
      const double b2 = *beta.beta * *beta.beta;
      w.field("s_lower_normalized_sq", gamma * gamma * gamma / (200.0 * b2 * b2 * b2 * b2));
    } else {
      w.field("s_lower_normalized_sq", std::optional<double>{});
    }
    w.field("beta_used", beta.beta);
    w.field("s_lower_kind", beta.kind);
    w.end_object();
  } else {
    w.null();
  }

  const std::size_t coords = sym_dim(a.b.dim());
  w.key("flags").begin_object();
  w.field("leading_degenerate", a.spectrum.degenerate);
  w.field("zero_measure", !(lambda1 > 0.0));
  w.field("n_below_coord_dim", data.labeled && data.samples().size() < coords);
  const bool rank_deficient = a.spectrum.full && a.spectrum.eigenvalues.size() > 0 &&
                              a.spectrum.eigenvalues(a.spectrum.eigenvalues.size() - 1) <= 1e-12 * std::abs(lambda1);
  w.field("rank_deficient", rank_deficient);
  w.end_object();
  (void)cfg;
}

std::string masses_path(const RunConfig& cfg) {
  if (cfg.assign) return *cfg.assign;
  if (cfg.output) return *cfg.output + ".masses.csv";
  return {};
}

}  // namespace

AnalyticModel model_from_name(std::string_view name, std::size_t d, double m4) {
  if (d < 1) throw UsageError("--d must be given (>= 1) with --model");
  if (name == "gaussian") return AnalyticModel::gaussian(SymMatrix::identity(d));
  if (name == "iid") return AnalyticModel::iid(d, m4);
  if (name == "iid-cube") return AnalyticModel::iid_cube(d);
  if (name == "iid-rademacher") return AnalyticModel::iid(d, 1.0);
  if (name == "projection-mixture") {
    if (d % 2 != 0) throw UsageError("projection-mixture needs an even --d");
    return AnalyticModel::projection_mixture(d);
  }
  if (name == "discrete-axes") return AnalyticModel::discrete_axes(d);
  if (name == "sphere") return AnalyticModel::sphere(d);
  if (name == "gaussian-delta0") {
    // 1/2 N(0, sqrt(2) I) + 1/2 delta_0
    return AnalyticModel::mixture({AnalyticModel::scaled(AnalyticModel::gaussian(SymMatrix::identity(d)),
                                                         std::pow(2.0, 0.25)),
                                   AnalyticModel::dirac(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)))},
                                  {0.5, 0.5});
  }
  throw UsageError("unknown model '" + std::string(name) +
                   "' (expected gaussian, iid, iid-cube, iid-rademacher, projection-mixture, discrete-axes, "
                   "sphere or gaussian-delta0)");
}

std::string cmd_analyze(const RunConfig& cfg) {
  Timings timings;
  const Data data = load(cfg, true);
  timings.mark("load");
  const Analysis a = analyze_moments(cfg, data, timings);
  const BetaChoice beta = choose_beta(cfg, data);
  timings.mark("beta");

  JsonWriter w;
  w.begin_object();
  write_preamble(w, cfg);
  write_data(w, data, a.b.dim());
  write_spectrum(w, a, cfg.full_spectrum ? a.spectrum.eigenvalues.size() : kDefaultReportedEigenvalues);
  write_analysis(w, cfg, data, a, beta);
  write_beta(w, beta);
  timings.write(w);
  w.end_object();
  return w.str();
}

std::string cmd_spectrum(const RunConfig& cfg) {
  Timings timings;
  const Data data = load(cfg, true);
  timings.mark("load");
  const Analysis a = analyze_moments(cfg, data, timings);

  JsonWriter w;
  w.begin_object();
  write_preamble(w, cfg);
  write_data(w, data, a.b.dim());
  write_spectrum(w, a, static_cast<std::size_t>(a.spectrum.eigenvalues.size()));
  timings.write(w);
  w.end_object();
  return w.str();
}

std::string cmd_decompose(const RunConfig& cfg) {
  Timings timings;
  const Data data = load(cfg, false);
  const SampleSet& s = data.samples();
  timings.mark("load");

  BetaSource source = BetaSource::user;
  std::optional<BetaEstimate> estimate;
  double beta = 1.0;
  if (cfg.beta) {
    if (!(*cfg.beta >= 1.0)) throw UsageError("--beta must be >= 1");
    beta = *cfg.beta;
  } else {
    BetaOptions options;
    options.dense_limit = cfg.dense_limit;
    estimate = estimate_beta(s, cfg.p, cfg.n_dirs, cfg.seed, options);
    beta = std::max(1.0, estimate->lower);
    source = BetaSource::estimated;
  }
  timings.mark("beta");
  const Decomposition dec = run_decomposition(s, beta, source, {cfg.dense_limit, 0});
  timings.mark("decompose");

  const std::string path = masses_path(cfg);
  if (!path.empty()) {
    Eigen::MatrixXd masses(dec.mass1.size(), 2);
    masses.col(0) = dec.mass1;
    masses.col(1) = dec.mass2;
    write_atomic(path, format_csv(masses, "columns: w1, w2"));
  }

  JsonWriter w;
  w.begin_object();
  write_preamble(w, cfg);
  write_data(w, data, s.dim());
  w.key("decomposition").begin_object();
  w.field("b0", dec.b0);
  w.field("alpha", dec.alpha);
  w.field("achieved", dec.achieved);
  w.field("achieved_normalized", dec.b_frob > 0.0 ? dec.achieved / dec.b_frob : 0.0);
  w.field("guarantee", dec.guarantee);
  w.field("guarantee_kind", source == BetaSource::estimated ? "heuristic" : "certified");
  w.field("beta", dec.beta);
  w.field("beta_source", to_string(dec.beta_source));
  w.field("gamma", dec.gamma);
  w.field("b_frob", dec.b_frob);
  w.field("centered_lambda1", dec.centered_lambda1);
  w.field("median_deviation", dec.median_deviation);
  w.field("mass1_total", dec.mass1.sum());
  w.field("mass2_total", dec.mass2.sum());
  w.field("degenerate_direction", dec.degenerate);
  w.field("direction", vech_iso(dec.a));
  w.field("assignment_file", path.empty() ? std::optional<std::string>{} : std::optional<std::string>{path});
  w.end_object();

  w.key("label_agreement");
  const auto& labels = data.labeled->labels;
  const bool two_labels =
      !labels.empty() && std::all_of(labels.begin(), labels.end(), [](std::size_t l) { return l < 2; }) &&
      std::any_of(labels.begin(), labels.end(), [](std::size_t l) { return l == 1; });
  if (two_labels) {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::size_t side = dec.mass1(static_cast<Eigen::Index>(i)) > dec.mass2(static_cast<Eigen::Index>(i)) ? 0 : 1;
      agree += side == labels[i];
    }
    const double rate = static_cast<double>(agree) / static_cast<double>(labels.size());
    w.value(std::max(rate, 1.0 - rate));
  } else {
    w.null();
  }

  w.key("oracle");
  if (s.size() <= kOracleMaxAtoms && s.size() % 2 == 0 && s.uniform_weights()) {
    const OracleResult o = s_exact_small(s);
    w.begin_object();
    w.field("s_exact", o.value);
    w.field("mask", o.mask);
    w.field("achieved_le_s", dec.achieved <= o.value + 1e-9);
    w.end_object();
  } else {
    w.null();
  }
  if (estimate) {
    BetaChoice c;
    c.estimate = estimate;
    write_beta(w, c);
  }
  timings.write(w);
  w.end_object();
  return w.str();
}

std::string cmd_oracle(const RunConfig& cfg) {
  Timings timings;
  const Data data = load(cfg, false);
  const SampleSet& s = data.samples();
  timings.mark("load");
  const OracleResult split = s_exact_small(s);
  timings.mark("split");
  const OracleResult beta = beta_exact_small(s, cfg.p);
  timings.mark("beta");
  const double b_frob = second_moment(s).frobenius_norm();

  JsonWriter w;
  w.begin_object();
  write_preamble(w, cfg);
  write_data(w, data, s.dim());
  w.key("oracle").begin_object();
  w.field("instance_hash", split.instance_hash);
  w.key("s").begin_object();
  w.field("value", split.value);
  w.field("normalized", b_frob > 0.0 ? split.value / b_frob : 0.0);
  w.field("mask", split.mask);
  w.field("method", split.method);
  w.end_object();
  w.key("beta").begin_object();
  w.field("p", cfg.p);
  w.field("value", beta.value);
  w.field("direction", beta.direction);
  w.field("method", beta.method);
  w.end_object();
  w.end_object();
  timings.write(w);
  w.end_object();
  return w.str();
}

std::string cmd_synth(const RunConfig& cfg) {
  if (cfg.input) throw UsageError("synth takes --model, not --input");
  if (!cfg.model) throw UsageError("synth needs --model");
  if (cfg.analytic) throw UsageError("--analytic is not available for synth");
  if (cfg.n < 1) throw UsageError("--n must be >= 1");
  const AnalyticModel model = model_from_name(*cfg.model, cfg.d, cfg.m4);
  const SampleSet s = sample(model, cfg.n, cfg.seed);
  if (!s.uniform_weights()) throw Unsupported("synth: model " + model.describe() + " yields non-uniform weights");
  const std::string header = "model=" + model.describe() + ", seed=" + std::to_string(cfg.seed) +
                             ", version=" + std::string(kToolVersion) + ", rng=" + std::string(Rng::kAlgorithm);
  return format_csv(s.points(), header);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kUsage;
  if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const NotPsdError*>(&e) ||
      dynamic_cast<const InconsistentInputs*>(&e)) {
    return kNumeric;
  }
  if (dynamic_cast<const Error*>(&e) || dynamic_cast<const std::bad_alloc*>(&e)) return kData;
  return kNumeric;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fourth-moment spectra, gap statistics and median-split decompositions.", std::string(kToolName)};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kToolVersion));

  RunConfig cfg;
  std::string input, model, output, assign;
  double beta = 0.0;
  std::size_t top_k = 0;
  std::map<std::string, CLI::App*> subs;
  const std::vector<std::pair<std::string, std::string>> specs = {
      {"analyze", "Spectrum, spectral chain, gap statistic, separation bounds and beta estimate"},
      {"decompose", "Median split along the leading centered direction"},
      {"oracle", "Exact separation and beta by enumeration (small instances)"},
      {"synth", "Write a seeded sample from a model as CSV"},
      {"spectrum", "Eigenvalues of the fourth-moment operator"},
  };
  std::map<std::string, std::vector<CLI::Option*>> presence;
  for (const auto& [name, help] : specs) {
    CLI::App* sc = app.add_subcommand(name, help);
    subs[name] = sc;
    auto* in = sc->add_option("--input", input, "CSV file, one sample per row");
    auto* mo = sc->add_option("--model", model,
                              "gaussian | iid | iid-cube | iid-rademacher | projection-mixture | discrete-axes | "
                              "sphere | gaussian-delta0");
    in->excludes(mo);
    mo->excludes(in);
    sc->add_option("--d", cfg.d, "Dimension for --model");
    sc->add_option("--n", cfg.n, "Sample count for --model")->capture_default_str();
    sc->add_option("--seed", cfg.seed, "Seed for sampling and random directions")->capture_default_str();
    sc->add_option("--m4", cfg.m4, "Fourth moment for --model iid")->capture_default_str();
    sc->add_option("--output", output, "Write the result here instead of stdout");
    sc->add_option("--dense-limit", cfg.dense_limit, "Largest d for the dense operator")->capture_default_str();
    sc->add_option("--p", cfg.p, "Exponent for beta")->check(CLI::IsMember({4, 8}))->capture_default_str();
    auto* be = sc->add_option("--beta", beta, "Certified L^p-L^2 constant (>= 1)");
    auto* tk = sc->add_option("--top-k", top_k, "Power iteration for the top K eigenpairs")->check(CLI::PositiveNumber);
    sc->add_flag("--analytic", cfg.analytic, "Use closed-form moments of --model");
    sc->add_flag("--full-spectrum", cfg.full_spectrum, "List all eigenvalues");
    auto* as = sc->add_option("--assign", assign, "decompose: per-atom mass CSV (w1, w2)");
    sc->add_option("--n-dirs", cfg.n_dirs, "Random directions for the beta search")->capture_default_str();
    presence[name] = {in, mo, be, tk, as};
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  for (const auto& [name, sc] : subs) {
    if (!sc->parsed()) continue;
    cfg.subcommand = name;
    const auto& opts = presence[name];
    if (opts[0]->count() > 0) cfg.input = input;
    if (opts[1]->count() > 0) cfg.model = model;
    if (opts[2]->count() > 0) cfg.beta = beta;
    if (opts[3]->count() > 0) cfg.top_k = top_k;
    if (opts[4]->count() > 0) cfg.assign = assign;
  }
  if (!output.empty()) cfg.output = output;

  try {
    std::string result;
    if (cfg.subcommand == "analyze") {
      result = cmd_analyze(cfg);
    } else if (cfg.subcommand == "spectrum") {
      result = cmd_spectrum(cfg);
    } else if (cfg.subcommand == "decompose") {
      result = cmd_decompose(cfg);
    } else if (cfg.subcommand == "oracle") {
      result = cmd_oracle(cfg);
    } else {
      result = cmd_synth(cfg);
    }
    if (cfg.output) {
      write_atomic(*cfg.output, result);
    } else {
      out << result;
    }
    return kOk;
  } catch (const std::exception& e) {
    err << kToolName << ": error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace momspec::cli
