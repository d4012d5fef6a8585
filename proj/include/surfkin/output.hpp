#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace surfkin {

/// %.17g, so a value read back compares equal.
std::string format_number(double value);

/// Comma-separated table with a header row. Cells are preformatted text.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(std::vector<std::string> cells);
  CsvTable& row(std::span<const double> values);
  std::size_t rows() const { return rows_.size(); }
  std::string text() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Whitespace-separated columns for gnuplot; each block is terminated by two blank lines so
/// `index n` selects it.
class GnuplotData {
 public:
  explicit GnuplotData(std::vector<std::string> columns);
  GnuplotData& block(const std::string& title, std::span<const std::vector<double>> columns);
  std::string text() const;

 private:
  std::vector<std::string> columns_;
  std::string body_;
};

/// Header of four little-endian u64 grid sizes followed by the values as little-endian f64.
std::string distribution_dump(const std::array<std::uint64_t, 4>& sizes, std::span<const double> values);

std::string sha256_hex(std::string_view data);

/// Writes through a temporary in the same directory and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

struct ManifestCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double limit = 0.0;
};

struct RunManifest {
  std::string config_hash;
  std::string version;
  std::string subcommand;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string started_utc;
  double runtime_seconds = 0.0;
  std::vector<std::string> files;
  std::vector<ManifestCheck> checks;

  bool passed() const;
  std::string json_text() const;
};

/// Output directory of one run; every file written through it is listed in the manifest.
class RunOutput {
 public:
  explicit RunOutput(std::filesystem::path dir);
  const std::filesystem::path& dir() const { return dir_; }
  void write(const std::string& name, std::string_view content);
  const std::vector<std::string>& files() const { return files_; }
  void write_manifest(RunManifest manifest) const;

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

}  // namespace surfkin
