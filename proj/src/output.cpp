#include "surfkin/output.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

#include <json.hpp>
#include <openssl/evp.h>

#include "surfkin/errors.hpp"

namespace surfkin {

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::string join(const std::vector<std::string>& cells, char sep) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += sep;
    line += cells[i];
  }
  return line;
}

void put_le(std::string& out, std::uint64_t bits) {
  for (int b = 0; b < 8; ++b) out += static_cast<char>((bits >> (8 * b)) & 0xffu);
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw DomainError("csv row width differs from the header");
  rows_.push_back(std::move(cells));
  return *this;
}

CsvTable& CsvTable::row(std::span<const double> values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  return row(std::move(cells));
}

std::string CsvTable::text() const {
  std::string out = join(header_, ',') + '\n';
  for (const auto& r : rows_) out += join(r, ',') + '\n';
  return out;
}

GnuplotData::GnuplotData(std::vector<std::string> columns) : columns_(std::move(columns)) {}

GnuplotData& GnuplotData::block(const std::string& title, std::span<const std::vector<double>> columns) {
  if (columns.size() != columns_.size()) throw DomainError("gnuplot block width differs from the header");
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != n) throw DomainError("gnuplot columns differ in length");
  }
  body_ += "# " + title + '\n';
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> cells;
    for (const auto& c : columns) cells.push_back(format_number(c[i]));
    body_ += join(cells, ' ') + '\n';
  }
  body_ += "\n\n";
  return *this;
}

std::string GnuplotData::text() const { return "# " + join(columns_, ' ') + '\n' + body_; }

std::string distribution_dump(const std::array<std::uint64_t, 4>& sizes, std::span<const double> values) {
  std::uint64_t expected = 1;
  for (auto s : sizes) expected *= s;
  if (expected != values.size()) throw DomainError("dump sizes do not match the value count");
  std::string out;
  out.reserve(8 * (4 + values.size()));
  for (auto s : sizes) put_le(out, s);
  for (double v : values) put_le(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot rename '" + tmp.string() + "': " + ec.message());
}

bool RunManifest::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::string RunManifest::json_text() const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["started_utc"] = started_utc;
  j["runtime_seconds"] = runtime_seconds;
  j["files"] = files;
  auto checks_json = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    // NaN and inf are not JSON; such values are reported as null.
    e["value"] = std::isfinite(c.value) ? nlohmann::ordered_json(c.value) : nullptr;
    e["limit"] = std::isfinite(c.limit) ? nlohmann::ordered_json(c.limit) : nullptr;
    checks_json.push_back(std::move(e));
  }
  j["checks"] = std::move(checks_json);
  j["passed"] = passed();
  return j.dump(2) + '\n';
}

RunOutput::RunOutput(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

void RunOutput::write(const std::string& name, std::string_view content) {
  write_atomic(dir_ / name, content);
  files_.push_back(name);
}

void RunOutput::write_manifest(RunManifest manifest) const {
  manifest.files = files_;
  write_atomic(dir_ / "manifest.json", manifest.json_text());
}

}  // namespace surfkin
