#pragma once

// Subcommands of the moment-spectra tool. Each returns the JSON report (or
// CSV for synth) as text; run_cli adds argument parsing, file output and the
// exit-code contract.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "momspec/error.hpp"
#include "momspec/models.hpp"
#include "momspec/moments.hpp"

namespace momspec::cli {

inline constexpr std::string_view kToolName = "moment-spectra";
inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kSchema = "moment-spectra/1";

/// Eigenvalues listed in a report unless the full spectrum is requested.
inline constexpr std::size_t kDefaultReportedEigenvalues = 10;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Bad command-line configuration (exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string subcommand;
  std::optional<std::string> input;
  std::optional<std::string> model;
  std::size_t d = 0;
  std::size_t n = 10000;
  int p = 8;
  std::optional<double> beta;
  std::uint64_t seed = 0;
  std::optional<std::string> output;
  std::size_t dense_limit = kDefaultDenseLimit;
  std::optional<std::size_t> top_k;
  bool analytic = false;
  bool full_spectrum = false;
  double m4 = 3.0;
  /// decompose: per-atom mass CSV; defaults to <output>.masses.csv.
  std::optional<std::string> assign;
  std::size_t n_dirs = 256;
};

/// Families accepted by --model.
AnalyticModel model_from_name(std::string_view name, std::size_t d, double m4);

std::string cmd_analyze(const RunConfig& cfg);
std::string cmd_spectrum(const RunConfig& cfg);
std::string cmd_decompose(const RunConfig& cfg);
std::string cmd_oracle(const RunConfig& cfg);
/// The n x d sample as CSV with a `# model=..., seed=..., version=...` line.
std::string cmd_synth(const RunConfig& cfg);

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// Parse argv, run the subcommand, write its result to --output (atomically)
/// or to `out`, and report errors on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace momspec::cli
