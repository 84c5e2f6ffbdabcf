#pragma once

// Small synthetic datasets shared by the model, attack and evaluation tests.

#include <cstdint>

#include "team/data/dataset.hpp"
#include "team/data/synthetic.hpp"

namespace team::testing {

struct SyntheticSplit {
  data::FeatureSchema schema;
  data::Normalizer norm;
  data::Dataset train;
  data::Dataset test;
};

inline data::SyntheticConfig small_config(std::size_t records = 4000) {
  data::SyntheticConfig cfg;
  cfg.features = 16;
  cfg.nonfunctional = 6;
  cfg.records = records;
  cfg.separation = 0.15;
  return cfg;
}

// Chronological split; normalization fitted on the first part only.
inline SyntheticSplit make_split(const data::SyntheticConfig& cfg, std::uint64_t seed, double train_share = 0.8) {
  auto gen = data::gen_synthetic(cfg, seed);
  const auto cut = static_cast<std::size_t>(train_share * static_cast<double>(gen.table.rows.size()));
  data::RawTable a, b;
  a.columns = b.columns = gen.table.columns;
  for (std::size_t k = 0; k < gen.table.rows.size(); ++k) {
    auto& dst = k < cut ? a : b;
    dst.rows.push_back(gen.table.rows[k]);
    dst.labels.push_back(gen.table.labels[k]);
  }
  SyntheticSplit s;
  s.schema = gen.schema;
  s.norm = data::fit_normalizer(a, s.schema);
  s.train = data::normalize(a, s.schema, s.norm);
  s.test = data::normalize(b, s.schema, s.norm);
  return s;
}

}  // namespace team::testing
