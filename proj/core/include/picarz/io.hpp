#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "picarz/inference.hpp"
#include "picarz/metrics.hpp"
#include "picarz/simulation.hpp"

namespace picarz {

/// Flat `section.key = value` configuration. '#' starts a comment. Every
/// lookup records the effective value (given or default) for the echo.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string require_string(const std::string& key) const;

  /// Keys present in the file that no lookup has read.
  std::vector<std::string> unused_keys() const;
  /// Sorted `key = value` lines of every effective setting.
  void write_echo(std::ostream& out) const;
  const std::map<std::string, std::string>& effective() const { return effective_; }
  /// Settings as given, before any lookup.
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> effective_;
};

/// Columns x_coord,y_coord,z,x1..xk,split with split in {train, validate}.
void write_dataset_csv(std::ostream& out, const SyntheticDataset& data);
SyntheticDataset read_dataset_csv(std::istream& in);

/// Generator parameters and seed as JSON.
void write_dataset_metadata(std::ostream& out, const SyntheticDataset& data);
/// Family and threshold from a metadata sidecar.
TwoPartFamily read_dataset_family(std::istream& in);

std::filesystem::path metadata_path(const std::filesystem::path& csv);
std::filesystem::path summary_path(const std::filesystem::path& csv);

/// Chain draws with one named column per scalar component.
void write_chain_csv(std::ostream& out, const Chain& chain);
/// Acceptance, timing, layout and per-parameter diagnostics as JSON.
void write_chain_summary(std::ostream& out, const Chain& chain, const TwoPartFamily& family, Link link);
/// Rebuilds a chain from its CSV and JSON summary.
Chain read_chain(std::istream& csv, std::istream& summary, TwoPartFamily& family, Link& link);

/// Validation report for one fit as JSON.
void write_validation_json(std::ostream& out, const ValidationReport& report, const std::string& family,
                           const std::string& method, double minutes);
ReportRow read_validation_json(std::istream& in);

}  // namespace picarz
