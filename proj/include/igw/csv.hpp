// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "igw/reproduction_laws.hpp"

namespace igw {

inline constexpr std::string_view kVersion = "0.1.0";

/// Quotes a field when it holds a comma, quote or line break.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string cell(double v) { return format_real(v); }
inline std::string cell(std::uint64_t v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "true" : "false"; }
inline std::string cell(std::string_view s) { return std::string(s); }
inline std::string cell(const char* s) { return std::string(s); }

/// CSV with a leading `# key=value` block, LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void meta(std::string_view key, std::string_view value) { os_ << "# " << key << '=' << value << '\n'; }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_field(fields[i]);
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

}  // namespace igw
