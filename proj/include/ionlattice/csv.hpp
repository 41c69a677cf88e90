#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ionlattice/config.hpp"

namespace ionlattice {

inline constexpr const char* artifact_version = "0.1.0";

// CSV with a '#'-prefixed metadata header carrying the fully resolved config,
// so every output file is reproducible from its own header.
class CsvWriter {
public:
  CsvWriter(const std::string& path, const ExperimentConfig& config,
            const std::string& subcommand)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open output file: " + path);
    out_ << "# ionlattice " << artifact_version << "\n";
    out_ << "# subcommand = " << subcommand << "\n";
    for (const auto& [k, v] : config.entries()) out_ << "# " << k << " = " << v << "\n";
  }

  void comment(const std::string& key, double value) {
    out_ << "# " << key << " = " << format(value) << "\n";
  }
  void comment(const std::string& key, const std::string& value) {
    out_ << "# " << key << " = " << value << "\n";
  }

  void columns(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i)
      out_ << names[i] << (i + 1 < names.size() ? "," : "\n");
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i)
      out_ << format(values[i]) << (i + 1 < values.size() ? "," : "\n");
  }

  void row_mixed(const std::vector<std::string>& values) {
    for (std::size_t i = 0; i < values.size(); ++i)
      out_ << values[i] << (i + 1 < values.size() ? "," : "\n");
  }

  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
  }

private:
  std::ofstream out_;
};

} // namespace ionlattice
