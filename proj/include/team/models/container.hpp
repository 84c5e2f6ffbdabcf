#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "team/nn/tensor.hpp"

namespace team::models {

/// Versioned binary container shared by model checkpoints and attack
/// artifacts. Layout (all integers little-endian):
///
///   magic      8 bytes  "TEAMCKPT"
///   version    u32      kContainerVersion
///   kind       u32 length + bytes   ("classifier", "team-attack", ...)
///   metadata   u64 length + bytes   (JSON, keys sorted)
///   tensors    u32 count, then per tensor:
///                u32 name length + bytes, u32 rows, u32 cols,
///                rows*cols f64 in row-major order
///   hash       32 bytes  SHA-256 of every preceding byte
struct Container {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, nn::Matrix>> tensors;

  const nn::Matrix& tensor(const std::string& name) const;
};

inline constexpr std::uint32_t kContainerVersion = 1;

std::string encode_container(const Container& c);
/// Throws IntegrityError on bad magic, version skew, truncation, trailing
/// bytes or hash mismatch.
Container decode_container(const std::string& bytes);

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

/// Hex SHA-256 of the file's bytes.
std::string file_sha256(const std::string& path);

}  // namespace team::models
