#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace koopdim {

inline constexpr const char* kVersion = "0.1.0";

std::string format_number(double x);  // 17 significant digits
std::string csv_escape(const std::string& field);

class CsvTable {
 public:
  using Value = std::variant<std::string, double, std::int64_t>;

  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<Value> row);
  std::string render() const;
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct Manifest {
  std::string experiment;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> exactness;  // quantity -> "exact" | "monte-carlo"
  std::vector<std::string> files;
  std::vector<std::string> warnings;
  double wall_time_seconds = 0.0;
  int exit_code = 0;
  std::string started_at;

  std::string to_json() const;
};

std::string utc_timestamp();

}  // namespace koopdim
