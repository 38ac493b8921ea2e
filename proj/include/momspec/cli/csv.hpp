#pragma once

// Plain numeric CSV: one sample per row, comma-separated, '#' lines ignored.

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "momspec/error.hpp"
#include "momspec/moments.hpp"

namespace momspec::cli {

/// Malformed CSV content; the message names the offending line.
class CsvError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or unwritable file.
class IoError : public Error {
 public:
  using Error::Error;
};

Eigen::MatrixXd parse_csv(std::string_view text);
/// Rows of the file as a uniformly weighted sample set.
SampleSet read_csv(const std::filesystem::path& path);

/// Rows with 17 significant digits, so reading them back is lossless.
std::string format_csv(const Eigen::MatrixXd& rows, std::string_view header_comment = {});

/// Write through a temporary file in the same directory and rename it over
/// `path`, so readers never see a partial file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// %.17g
std::string format_real(double x);

}  // namespace momspec::cli
