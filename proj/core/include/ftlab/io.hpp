#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ftlab {

// Shortest round-trip decimal for a double; locale-free, reproducible.
std::string fmt_double(double v);
std::string fmt_float(float v);

// 64-bit FNV-1a over raw bytes, rendered as 16 hex digits.
std::uint64_t fnv1a_bytes(const void* data, std::size_t len);
std::string hex64(std::uint64_t h);
std::string hash_file(const std::filesystem::path& p);

void write_text_file(const std::filesystem::path& p, const std::string& content);
std::string read_text_file(const std::filesystem::path& p);

// Plain-text key-value manifest, one "key = value" per line, LF endings,
// keys emitted in insertion order.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, bool value);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;

  std::string serialize() const;
  void save(const std::filesystem::path& p) const;
  static Manifest load(const std::filesystem::path& p);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Incremental CSV writer with a fixed header; UTF-8, LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  std::string serialize() const;
  void save(const std::filesystem::path& p) const;
  std::size_t row_count() const { return rows_; }

 private:
  std::string buf_;
  std::size_t columns_ = 0;
  std::size_t rows_ = 0;
};

// Minimal CSV reader for the files this project writes (no quoting needed).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& p);

}  // namespace ftlab
