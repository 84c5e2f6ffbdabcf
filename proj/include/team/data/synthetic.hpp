#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "team/data/dataset.hpp"

namespace team::data {

/// Desk-scale stand-in for a flow-feature dataset.
///
/// Records come in class-homogeneous sessions whose lengths are uniform in
/// [session_min, session_max]. Each class is a Gaussian cluster around its
/// own mean; attack means sit `separation` away from the normal mean on
/// every feature, in a random direction per feature. For classes listed in
/// `high_temporal` the per-record noise follows an AR(1) drift with
/// coefficient `coupling` inside a session; everywhere else it is i.i.d.
/// Values are clipped to [0,1], so the schema ranges are fixed to [0,1].
///
/// The defaults make single records weak evidence (about 90% separable)
/// while a window of consecutive same-class records is near certain, so a
/// recurrent classifier has to lean on the past.
struct SyntheticConfig {
  std::string name = "synthetic";
  std::vector<std::string> class_names = {"normal", "dos"};
  std::vector<std::string> high_temporal = {"dos"};
  std::size_t features = 64;
  std::size_t nonfunctional = 24;  // per attack type, chosen at random
  std::size_t records = 10000;
  std::size_t session_min = 8;
  std::size_t session_max = 32;
  double normal_share = 0.5;
  double separation = 0.035;
  double noise = 0.1;
  double coupling = 0.5;

  void validate() const;
};

SyntheticConfig synthetic_config_from_yaml(const std::string& yaml_text);
std::string synthetic_config_to_yaml(const SyntheticConfig& cfg);

struct SyntheticData {
  FeatureSchema schema;
  RawTable table;
};

/// Byte-identical output for the same (config, seed).
SyntheticData gen_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

}  // namespace team::data
