#pragma once

// Streaming JSON writer for reports. Reals are printed with 17 significant
// digits so every double survives a round trip; non-finite reals become null.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace momspec::cli {

class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view k);

  JsonWriter& value(double x);
  JsonWriter& value(std::int64_t x);
  JsonWriter& value(std::uint64_t x);
  JsonWriter& value(int x) { return value(static_cast<std::int64_t>(x)); }
  JsonWriter& value(bool x);
  JsonWriter& value(std::string_view s);
  JsonWriter& value(const char* s) { return value(std::string_view(s)); }
  JsonWriter& null();
  template <class T>
  JsonWriter& value(const std::optional<T>& x) {
    return x ? value(*x) : null();
  }
  JsonWriter& value(const Eigen::VectorXd& v);

  template <class T>
  JsonWriter& field(std::string_view k, const T& x) {
    key(k);
    return value(x);
  }

  /// The finished document, newline-terminated.
  std::string str() const { return out_ + "\n"; }

 private:
  void before_value();
  void write_string(std::string_view s);
  JsonWriter& close(char bracket);
  void newline();

  std::string out_;
  std::vector<bool> first_;  // per open container: nothing written yet
  bool after_key_ = false;
};

}  // namespace momspec::cli
