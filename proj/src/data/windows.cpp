#include "team/data/windows.hpp"

#include <numeric>
#include <string>

#include "team/error.hpp"
#include "team/rng.hpp"

namespace team::data {

Window TimeStepComposition::records() const {
  Window w = adv_slots;
  w.insert(w.end(), org_slots.begin(), org_slots.end());
  return w;
}

std::vector<Window> stream_windows(const Dataset& ds, std::size_t time_n) {
  if (time_n == 0) throw ConfigError("stream_windows: time_n must be positive");
  std::vector<Window> out;
  for (std::size_t start = 0; start + time_n <= ds.records.size(); start += time_n) {
    out.emplace_back(ds.records.begin() + static_cast<std::ptrdiff_t>(start),
                     ds.records.begin() + static_cast<std::ptrdiff_t>(start + time_n));
  }
  return out;
}

std::vector<TimeStepComposition> make_windows(const Dataset& ds, std::size_t time_n, std::size_t adv_n,
                                              std::size_t org_n, int attack_type, std::uint64_t seed) {
  if (time_n == 0) throw ConfigError("make_windows: time_n must be positive");
  if (adv_n + org_n != time_n) {
    throw ConfigError("make_windows: adv_n (" + std::to_string(adv_n) + ") + org_n (" +
                      std::to_string(org_n) + ") must equal time_n (" + std::to_string(time_n) + ")");
  }
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < ds.records.size(); ++k) {
    if (ds.records[k].label == attack_type) idx.push_back(k);
  }
  if (idx.size() < time_n) {
    throw CountError("make_windows: " + std::to_string(idx.size()) + " records of class " +
                     std::to_string(attack_type) + ", need at least " + std::to_string(time_n));
  }
  const std::size_t count = idx.size() / time_n;
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  team::shuffle(order.begin(), order.end(), rng);

  std::vector<TimeStepComposition> out;
  out.reserve(count);
  for (std::size_t w : order) {
    TimeStepComposition c;
    c.attack_type = attack_type;
    c.source_index = w * time_n;
    for (std::size_t k = 0; k < time_n; ++k) {
      const Record& r = ds.records[idx[w * time_n + k]];
      (k < adv_n ? c.adv_slots : c.org_slots).push_back(r);
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace team::data
