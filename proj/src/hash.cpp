#include "team/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "team/error.hpp"

namespace team {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IntegrityError("sha256: digest failed");
  }
  std::string out;
  out.reserve(2 * len);
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", md[k]);
    out += buf;
  }
  return out;
}

}  // namespace team
