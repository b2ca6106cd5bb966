#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace kmswkg {

/// Version stamped on every emitted record.
inline constexpr int schema_version = 1;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// Append-only stream of JSON records, one per line. Each record gets a
/// "schema" field. Numbers use shortest round-trip formatting.
class NdjsonWriter {
 public:
  explicit NdjsonWriter(const std::filesystem::path& path);
  void write(nlohmann::json record);
  void flush() { out_.flush(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Reads every record; throws std::runtime_error on a schema mismatch.
std::vector<nlohmann::json> read_ndjson(const std::filesystem::path& path);

/// Writes rows of numbers as CSV with a header line.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

}  // namespace kmswkg
