#include "kmswkg/ndjson.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace kmswkg {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

NdjsonWriter::NdjsonWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void NdjsonWriter::write(nlohmann::json record) {
  record["schema"] = schema_version;
  out_ << record.dump() << '\n';
  if (!out_) throw std::runtime_error("write to " + path_.string() + " failed");
}

std::vector<nlohmann::json> read_ndjson(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<nlohmann::json> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    if (!j.contains("schema") || j["schema"] != schema_version)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": schema version " +
                               (j.contains("schema") ? j["schema"].dump() : std::string("missing")) +
                               " does not match " + std::to_string(schema_version));
    records.push_back(std::move(j));
  }
  return records;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw std::invalid_argument("csv header and columns differ");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_double(columns[c][r]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace kmswkg
