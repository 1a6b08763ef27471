#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "suvr/memory_bank.hpp"
#include "suvr/numeric.hpp"

namespace suvr {

enum class Strategy { bfs, dfs, greedy };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

// One discovered positive: the instance, the similarity that selected it, and
// the node it was selected from (the query for breadth picks, the previous
// frontier for depth picks).
struct PositivePick {
  std::size_t index;
  double similarity;
  std::size_t parent;

  bool operator==(const PositivePick&) const = default;
};

struct NegativePick {
  std::size_t index;
  double similarity;  // to the query

  bool operator==(const NegativePick&) const = default;
};

// Positive and negative neighbors for one query instance.
struct NeighborSet {
  std::size_t query = 0;
  Strategy strategy = Strategy::bfs;
  std::vector<PositivePick> positives;
  std::vector<NegativePick> negatives;

  std::vector<std::size_t> positive_indices() const;
  std::vector<std::size_t> negative_indices() const;

  bool operator==(const NeighborSet&) const = default;
};

// Throws if any NeighborSet invariant is violated: query excluded from both
// sides, sides disjoint, no duplicates, and |positives| + |negatives| ==
// expected_total when given.
void validate(const NeighborSet& set, std::size_t bank_size,
              std::optional<std::size_t> expected_total = std::nullopt);

// The k most similar instances to the query's bank row, query excluded,
// descending similarity with index tie-break; every parent is the query.
std::vector<PositivePick> bfs_positives(const MemoryBank& bank, std::size_t query,
                                        std::size_t k,
                                        kernels::Exec exec = kernels::Exec::parallel);

// k-hop chain: each hop moves to the most similar unvisited instance of the
// previous hop; parent links record the chain.
std::vector<PositivePick> dfs_positives(const MemoryBank& bank, std::size_t query,
                                        std::size_t k,
                                        kernels::Exec exec = kernels::Exec::parallel);

// Per step, takes whichever scores higher: the best unselected instance by
// similarity to the query (breadth candidate) or to the current frontier
// (depth candidate). Ties prefer the breadth candidate; the pick always
// becomes the new frontier.
std::vector<PositivePick> greedy_positives(const MemoryBank& bank, std::size_t query,
                                           std::size_t k,
                                           kernels::Exec exec = kernels::Exec::parallel);

struct NegativeSelection {
  std::vector<std::size_t> kept;        // surviving positives, original order
  std::vector<NegativePick> negatives;  // ascending similarity to the query
};

// Carves the m positives least similar to the query out of the positive set
// (ties resolved toward the higher index). Throws NegativesExhaustPositives
// when m >= |positives|.
NegativeSelection sample_negatives(const MemoryBank& bank, std::size_t query,
                                   std::span<const std::size_t> positives, std::size_t m);

// Runs the selected strategy, then carves negatives. |positives| ends at
// k - m, |negatives| at m.
NeighborSet discover(const MemoryBank& bank, std::size_t query, Strategy strategy,
                     std::size_t k, std::size_t m,
                     kernels::Exec exec = kernels::Exec::parallel);

// As above, plus extra_uniform negatives drawn uniformly from the rest of the
// bank (query and discovered instances excluded), appended after the carved
// ones in draw order.
NeighborSet discover(const MemoryBank& bank, std::size_t query, Strategy strategy,
                     std::size_t k, std::size_t m, std::size_t extra_uniform,
                     SeededRng& rng, kernels::Exec exec = kernels::Exec::parallel);

// One line-delimited JSON record per set; the data behind offline traversal
// inspection.
std::string neighbor_set_to_json(const NeighborSet& set);
NeighborSet neighbor_set_from_json(const std::string& line);

}  // namespace suvr
