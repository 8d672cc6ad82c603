#include "ftlab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ftlab/error.hpp"

namespace ftlab {

std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_float(float v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string hash_file(const std::filesystem::path& p) {
  return hex64(fnv1a_bytes(read_text_file(p).data(), std::filesystem::file_size(p)));
}

void write_text_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  require(f.good(), "cannot open for writing: " + p.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  require(f.good(), "write failed: " + p.string());
}

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  require(f.good(), "cannot open: " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void Manifest::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
  } else {
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
  }
}

void Manifest::set(const std::string& key, double value) { set(key, fmt_double(value)); }
void Manifest::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
void Manifest::set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
void Manifest::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

bool Manifest::has(const std::string& key) const { return index_.count(key) > 0; }

const std::string& Manifest::get(const std::string& key) const {
  auto it = index_.find(key);
  require(it != index_.end(), "manifest: missing key '" + key + "'");
  return entries_[it->second].second;
}

std::string Manifest::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

void Manifest::save(const std::filesystem::path& p) const { write_text_file(p, serialize()); }

Manifest Manifest::load(const std::filesystem::path& p) {
  Manifest m;
  std::istringstream in(read_text_file(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto pos = line.find(" = ");
    require(pos != std::string::npos, "manifest: malformed line '" + line + "' in " + p.string());
    m.set(line.substr(0, pos), line.substr(pos + 3));
  }
  return m;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buf_ += ",";
    buf_ += header[i];
  }
  buf_ += "\n";
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  require(cells.size() == columns_, "csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                                        std::to_string(columns_));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ",";
    buf_ += cells[i];
  }
  buf_ += "\n";
  ++rows_;
}

std::string CsvWriter::serialize() const { return buf_; }

void CsvWriter::save(const std::filesystem::path& p) const { write_text_file(p, buf_); }

CsvTable read_csv(const std::filesystem::path& p) {
  CsvTable t;
  std::istringstream in(read_text_file(p));
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      auto pos = line.find(',', start);
      if (pos == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

}  // namespace ftlab
