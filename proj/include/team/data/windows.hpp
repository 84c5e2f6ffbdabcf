#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "team/data/dataset.hpp"

namespace team::data {

/// time_n consecutive records as a recurrent model sees them.
using Window = std::vector<Record>;

/// One attack window: an adversarial prefix (to be perturbed) followed by
/// original suffix records left untouched. All records share attack_type.
struct TimeStepComposition {
  std::vector<Record> adv_slots;
  std::vector<Record> org_slots;
  int attack_type = 0;
  std::size_t source_index = 0;  // position of the first record among the attack-type records

  std::size_t time_n() const { return adv_slots.size() + org_slots.size(); }
  Window records() const;
};

/// Non-overlapping windows of time_n consecutive records, in dataset order;
/// a short tail is dropped. Used to train and score classifiers.
std::vector<Window> stream_windows(const Dataset& ds, std::size_t time_n);

/// Splits the records of `attack_type` (kept in dataset order) into
/// disjoint groups of time_n consecutive records; each group becomes one
/// composition (first adv_n records adversarial, next org_n original).
/// The seed permutes the order in which the windows are returned.
/// Throws ConfigError if adv_n + org_n != time_n and CountError if fewer
/// than time_n records of the type exist.
std::vector<TimeStepComposition> make_windows(const Dataset& ds, std::size_t time_n, std::size_t adv_n,
                                              std::size_t org_n, int attack_type, std::uint64_t seed);

}  // namespace team::data
