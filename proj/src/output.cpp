#include "cisim/output.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cisim/error.hpp"

namespace cisim {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << bytes;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> columns, const std::string& config_hash)
    : columns_(std::move(columns)) {
  meta_.emplace_back("config_hash", config_hash);
  meta_.emplace_back("tool", std::string("cisim ") + kToolVersion);
}

void CsvTable::meta(const std::string& key, const std::string& value) { meta_.emplace_back(key, value); }

void CsvTable::meta(const std::string& key, double value) { meta_.emplace_back(key, num(value)); }

void CsvTable::row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) {
    throw Error(ErrorCode::InvalidArgument, "CSV row width does not match the header");
  }
  rows_.push_back(values);
}

std::string CsvTable::str() const {
  std::ostringstream os;
  for (const auto& [k, v] : meta_) os << "# " << k << ": " << v << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
  os << "\n";
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << num(r[i]);
    os << "\n";
  }
  return os.str();
}

std::string CsvTable::write(const std::string& path) const {
  const std::string bytes = str();
  write_bytes(path, bytes);
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

std::string RunManifest::json() const {
  nlohmann::ordered_json j;
  j["tool"] = "cisim";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config_hash"] = config.hash();
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  std::istringstream in(config.canonical());
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = cfg;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : tasks) {
    j["tasks"].push_back({{"name", t.name}, {"status", t.status}, {"message", t.message}, {"wall_seconds", t.wall_seconds}});
  }
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"fnv1a64", f.checksum}});
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const { write_bytes(path, json()); }

}  // namespace cisim
