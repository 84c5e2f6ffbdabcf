#pragma once

// Deliberately naive recount of every metric from a prediction log CSV.
// Shares no code with the evaluation library beyond the file format.

#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace team::oracle {

using Pair = std::pair<std::size_t, std::size_t>;  // misjudged, evaluated

struct Recount {
  Pair mar{0, 0}, asr{0, 0}, mar1{0, 0}, mar2{0, 0}, base_mar1{0, 0}, base_mar2{0, 0};
};

struct Row {
  std::string key;
  std::size_t window = 0;
  std::size_t position = 0;
  std::string tag, predicted, original_predicted;
};

inline std::vector<Row> read_log(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    Row r;
    r.key = f[0] + "/" + f[1] + "/" + f[2] + "/" + f[3];
    r.window = std::stoul(f[4]);
    r.position = std::stoul(f[5]);
    r.tag = f[6];
    r.predicted = f[8];
    r.original_predicted = f[9];
    rows.push_back(r);
  }
  return rows;
}

// Keyed like ReportCell::key(): attack/method/surrogate/target.
inline std::map<std::string, Recount> recount(const std::string& path, const std::string& normal) {
  const auto rows = read_log(path);
  // AE prefix length of every window of every cell.
  std::map<std::pair<std::string, std::size_t>, std::size_t> prefix;
  for (const auto& r : rows) {
    auto& p = prefix[{r.key, r.window}];
    if (r.tag == "AE") p += 1;
  }
  std::map<std::string, Recount> out;
  for (const auto& r : rows) {
    Recount& c = out[r.key];
    const bool adv_normal = r.predicted == normal;
    const bool org_normal = r.original_predicted == normal;
    c.mar.second += 1;
    if (org_normal) c.mar.first += 1;
    if (r.tag == "AE") {
      c.asr.second += 1;
      if (adv_normal) c.asr.first += 1;
    }
    const std::size_t p = prefix[{r.key, r.window}];
    if (r.position == p) {
      c.mar1.second += 1;
      c.base_mar1.second += 1;
      if (adv_normal) c.mar1.first += 1;
      if (org_normal) c.base_mar1.first += 1;
    }
    if (r.position == p + 1) {
      c.mar2.second += 1;
      c.base_mar2.second += 1;
      if (adv_normal) c.mar2.first += 1;
      if (org_normal) c.base_mar2.first += 1;
    }
  }
  return out;
}

}  // namespace team::oracle
