#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ftlab/io.hpp"
#include "ftlab/model.hpp"

namespace ftlab {

namespace {

constexpr char kMagic[8] = {'F', 'T', 'L', 'A', 'B', 'C', 'K', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) {
    require(pos + n <= buf.size(), std::string("checkpoint: truncated while reading ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
};

std::string config_header(const Checkpoint& ckpt) {
  Manifest m;
  m.set("num_layers", static_cast<std::int64_t>(ckpt.config.num_layers));
  m.set("hidden_dim", static_cast<std::int64_t>(ckpt.config.hidden_dim));
  m.set("num_heads", static_cast<std::int64_t>(ckpt.config.num_heads));
  m.set("ffn_dim", static_cast<std::int64_t>(ckpt.config.ffn_dim));
  m.set("vocab_size", static_cast<std::int64_t>(ckpt.config.vocab_size));
  m.set("max_seq_len", static_cast<std::int64_t>(ckpt.config.max_seq_len));
  m.set("dropout_p", ckpt.config.dropout_p);
  m.set("num_classes", static_cast<std::int64_t>(ckpt.config.num_classes));
  m.set("provenance", ckpt.provenance);
  return m.serialize();
}

void parse_header(const std::string& text, Checkpoint& ckpt) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto pos = line.find(" = ");
    require(pos != std::string::npos, "checkpoint: malformed header line '" + line + "'");
    const std::string key = line.substr(0, pos);
    const std::string value = line.substr(pos + 3);
    if (key == "num_layers") ckpt.config.num_layers = std::stoull(value);
    else if (key == "hidden_dim") ckpt.config.hidden_dim = std::stoull(value);
    else if (key == "num_heads") ckpt.config.num_heads = std::stoull(value);
    else if (key == "ffn_dim") ckpt.config.ffn_dim = std::stoull(value);
    else if (key == "vocab_size") ckpt.config.vocab_size = std::stoull(value);
    else if (key == "max_seq_len") ckpt.config.max_seq_len = std::stoull(value);
    else if (key == "dropout_p") ckpt.config.dropout_p = std::stod(value);
    else if (key == "num_classes") ckpt.config.num_classes = std::stoull(value);
    else if (key == "provenance") ckpt.provenance = value;
    else fail("checkpoint: unknown header key '" + key + "'");
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kFormatVersion);
  const std::string header = config_header(ckpt);
  put_u64(out, header.size());
  out += header;
  put_u64(out, ckpt.params.size());
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& [name, tensor] = ckpt.params.item(i);
    put_u64(out, name.size());
    out += name;
    put_u64(out, tensor.rank());
    for (std::size_t d : tensor.shape) put_u64(out, d);
    for (float v : tensor.data) put_f32(out, v);
  }
  write_text_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string buf = read_text_file(path);
  Reader r{buf};
  require(r.bytes(sizeof(kMagic), "magic") == std::string(kMagic, sizeof(kMagic)),
          "checkpoint: bad magic in " + path.string());
  const std::uint32_t version = r.u32("version");
  require(version == kFormatVersion, "checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  const std::uint64_t header_len = r.u64("header length");
  parse_header(r.bytes(header_len, "header"), ckpt);
  const std::uint64_t count = r.u64("record count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t name_len = r.u64("name length");
    const std::string name = r.bytes(name_len, "name");
    const std::uint64_t rank = r.u64("rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.u64("dim");
    Tensor<float> t(shape);
    for (auto& v : t.data) v = r.f32("data");
    ckpt.params.add(name, std::move(t));
  }
  require(r.pos == buf.size(), "checkpoint: trailing bytes in " + path.string());
  return ckpt;
}

}  // namespace ftlab
