#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cisim/config.hpp"

namespace cisim {

inline constexpr const char* kToolVersion = "0.1.0";

// Comment block ("# key: value" lines, config hash first), one header row,
// then data rows printed with 17 significant digits.
class CsvTable {
 public:
  CsvTable(std::vector<std::string> columns, const std::string& config_hash);

  void meta(const std::string& key, const std::string& value);
  void meta(const std::string& key, double value);
  void row(const std::vector<double>& values);

  std::string str() const;
  // Writes the table and returns the FNV-1a checksum of the bytes written.
  std::string write(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<double>> rows_;
};

struct TaskRecord {
  std::string name;
  std::string status;  // "ok" or an error code name
  std::string message;
  double wall_seconds = 0.0;
};

struct FileRecord {
  std::string path;  // relative to the output directory
  std::string checksum;
};

struct RunManifest {
  std::string command;
  RunConfig config;
  std::vector<TaskRecord> tasks;
  std::vector<FileRecord> files;

  std::string json() const;
  void write(const std::string& path) const;
};

// Checksum of a file's bytes (FNV-1a 64, hex).
std::string file_checksum(const std::string& path);

}  // namespace cisim
