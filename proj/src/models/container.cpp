#include "team/models/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "team/error.hpp"
#include "team/hash.hpp"

namespace team::models {

namespace {

constexpr char kMagic[8] = {'T', 'E', 'A', 'M', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string32(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (n > end_ - pos_) throw IntegrityError(std::string("container truncated while reading ") + what);
  }

  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

const nn::Matrix& Container::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  throw IntegrityError("container '" + kind + "' has no tensor '" + name + "'");
}

std::string encode_container(const Container& c) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kContainerVersion);
  put_string32(out, c.kind);
  const std::string meta = c.meta.dump();
  put<std::uint64_t>(out, meta.size());
  out += meta;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& [name, m] : c.tensors) {
    put_string32(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) put<double>(out, m(r, k));
    }
  }
  const std::string hex = sha256_hex(out);
  for (std::size_t k = 0; k < hex.size(); k += 2) {
    out += static_cast<char>(std::stoi(hex.substr(k, 2), nullptr, 16));
  }
  return out;
}

Container decode_container(const std::string& bytes) {
  constexpr std::size_t kHash = 32;
  if (bytes.size() < sizeof kMagic + kHash) throw IntegrityError("container truncated: too short");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw IntegrityError("not a TEAM container (bad magic)");

  const std::size_t body = bytes.size() - kHash;
  Reader in(bytes, body);
  in.take(sizeof kMagic, "magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kContainerVersion) {
    throw IntegrityError("container version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kContainerVersion) + ")");
  }
  Container c;
  c.kind = in.take(in.get<std::uint32_t>("kind length"), "kind");
  const auto meta_len = in.get<std::uint64_t>("metadata length");
  const std::string meta = in.take(meta_len, "metadata");
  const auto count = in.get<std::uint32_t>("tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    std::string name = in.take(in.get<std::uint32_t>("tensor name length"), "tensor name");
    const auto rows = in.get<std::uint32_t>("tensor rows");
    const auto cols = in.get<std::uint32_t>("tensor cols");
    nn::Matrix m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t k = 0; k < cols; ++k) m(r, k) = in.get<double>("tensor data");
    }
    c.tensors.emplace_back(std::move(name), std::move(m));
  }
  if (in.pos() != body) throw IntegrityError("container has unexpected trailing bytes");

  std::string stored_hex;
  static const char* digits = "0123456789abcdef";
  for (std::size_t k = body; k < bytes.size(); ++k) {
    const auto b = static_cast<unsigned char>(bytes[k]);
    stored_hex += digits[b >> 4];
    stored_hex += digits[b & 15];
  }
  if (stored_hex != sha256_hex(std::string_view(bytes).substr(0, body))) {
    throw IntegrityError("container content hash mismatch");
  }
  try {
    c.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("container metadata is not valid JSON: ") + e.what());
  }
  return c;
}

void write_container(const std::string& path, const Container& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  const std::string bytes = encode_container(c);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Container read_container(const std::string& path) { return decode_container(slurp(path)); }

std::string file_sha256(const std::string& path) { return sha256_hex(slurp(path)); }

}  // namespace team::models
