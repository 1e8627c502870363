#pragma once

#include <cstdint>
#include <string>

namespace ddsl {

// Unit accounting for a simulated map/shuffle/reduce round. One unit is one
// stored vertex id. map_in covers the map phase (reads plus emitted pairs),
// shuffle the pairs moved between phases, reduce_in the reducer reads and
// reduce_out the written output.
struct CostReport {
  std::uint64_t map_in = 0;
  std::uint64_t shuffle = 0;
  std::uint64_t reduce_in = 0;
  std::uint64_t reduce_out = 0;

  std::uint64_t total() const { return map_in + shuffle + reduce_in + reduce_out; }

  CostReport& operator+=(const CostReport& o) {
    map_in += o.map_in;
    shuffle += o.shuffle;
    reduce_in += o.reduce_in;
    reduce_out += o.reduce_out;
    return *this;
  }
};

struct Round {
  std::string kind;   // "leaves", "join", "decompress", "storage-update", ...
  std::string label;
  CostReport cost;
};

}  // namespace ddsl
