#include "suvr/neighbors.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "suvr/errors.hpp"

namespace suvr {

using nlohmann::json;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::bfs: return "bfs";
    case Strategy::dfs: return "dfs";
    case Strategy::greedy: return "greedy";
  }
  return "bfs";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "bfs") return Strategy::bfs;
  if (name == "dfs") return Strategy::dfs;
  if (name == "greedy") return Strategy::greedy;
  throw ConfigError("strategy: expected bfs|dfs|greedy, got '" + name + "'");
}

std::vector<std::size_t> NeighborSet::positive_indices() const {
  std::vector<std::size_t> out;
  out.reserve(positives.size());
  for (const auto& p : positives) out.push_back(p.index);
  return out;
}

std::vector<std::size_t> NeighborSet::negative_indices() const {
  std::vector<std::size_t> out;
  out.reserve(negatives.size());
  for (const auto& n : negatives) out.push_back(n.index);
  return out;
}

void validate(const NeighborSet& set, std::size_t bank_size,
              std::optional<std::size_t> expected_total) {
  std::unordered_set<std::size_t> seen;
  for (const auto& p : set.positives) {
    if (p.index >= bank_size || p.parent >= bank_size) {
      throw IndexOutOfRange("NeighborSet: positive index out of range");
    }
    if (p.index == set.query) throw SetOverlap("NeighborSet: query listed as positive");
    if (!seen.insert(p.index).second) {
      throw SetOverlap("NeighborSet: duplicate positive " + std::to_string(p.index));
    }
  }
  for (const auto& n : set.negatives) {
    if (n.index >= bank_size) throw IndexOutOfRange("NeighborSet: negative index out of range");
    if (n.index == set.query) throw SetOverlap("NeighborSet: query listed as negative");
    if (!seen.insert(n.index).second) {
      throw SetOverlap("NeighborSet: index " + std::to_string(n.index) +
                       " appears in both sides");
    }
  }
  if (expected_total &&
      set.positives.size() + set.negatives.size() != *expected_total) {
    throw SetOverlap("NeighborSet: expected " + std::to_string(*expected_total) +
                     " discovered instances, have " +
                     std::to_string(set.positives.size() + set.negatives.size()));
  }
}

namespace {

void check_headroom(const MemoryBank& bank, std::size_t query, std::size_t k) {
  if (query >= bank.size()) {
    throw IndexOutOfRange("neighbor discovery: query " + std::to_string(query) +
                          " out of range");
  }
  if (k + 1 > bank.size()) {
    throw NotEnoughCandidates("neighbor discovery: k = " + std::to_string(k) +
                              " but bank holds only " + std::to_string(bank.size()) +
                              " instances");
  }
}

// argmax over instances with mask == 0, ties toward the lower index.
std::size_t masked_argmax(std::span<const double> scores, const std::vector<char>& mask) {
  std::size_t best = scores.size();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask[i]) continue;
    if (scores[i] > best_score) {
      best_score = scores[i];
      best = i;
    }
  }
  return best;
}

}  // namespace

std::vector<PositivePick> bfs_positives(const MemoryBank& bank, std::size_t query,
                                        std::size_t k, kernels::Exec exec) {
  check_headroom(bank, query, k);
  Vec scores = bank.similarities(bank.row(query), exec);
  std::size_t excluded[] = {query};
  std::vector<std::size_t> top = top_k_excluding(scores, k, excluded);
  std::vector<PositivePick> out;
  out.reserve(k);
  for (std::size_t idx : top) out.push_back({idx, scores[idx], query});
  return out;
}

std::vector<PositivePick> dfs_positives(const MemoryBank& bank, std::size_t query,
                                        std::size_t k, kernels::Exec exec) {
  check_headroom(bank, query, k);
  std::vector<char> visited(bank.size(), 0);
  visited[query] = 1;
  std::vector<PositivePick> out;
  out.reserve(k);
  std::size_t frontier = query;
  for (std::size_t step = 0; step < k; ++step) {
    Vec scores = bank.similarities(bank.row(frontier), exec);
    std::size_t pick = masked_argmax(scores, visited);
    out.push_back({pick, scores[pick], frontier});
    visited[pick] = 1;
    frontier = pick;
  }
  return out;
}

std::vector<PositivePick> greedy_positives(const MemoryBank& bank, std::size_t query,
                                           std::size_t k, kernels::Exec exec) {
  check_headroom(bank, query, k);
  std::vector<char> taken(bank.size(), 0);
  taken[query] = 1;
  Vec query_scores = bank.similarities(bank.row(query), exec);
  Vec frontier_scores = query_scores;
  std::size_t frontier = query;

  std::vector<PositivePick> out;
  out.reserve(k);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t breadth = masked_argmax(query_scores, taken);
    std::size_t depth = masked_argmax(frontier_scores, taken);
    // Tie prefers the breadth candidate: its similarity is anchored at the
    // query.
    bool take_depth = frontier_scores[depth] > query_scores[breadth];
    std::size_t pick = take_depth ? depth : breadth;
    double sim = take_depth ? frontier_scores[depth] : query_scores[breadth];
    std::size_t parent = take_depth ? frontier : query;
    out.push_back({pick, sim, parent});
    taken[pick] = 1;
    frontier = pick;
    frontier_scores = bank.similarities(bank.row(frontier), exec);
  }
  return out;
}

NegativeSelection sample_negatives(const MemoryBank& bank, std::size_t query,
                                   std::span<const std::size_t> positives, std::size_t m) {
  if (m >= positives.size()) {
    throw NegativesExhaustPositives("sample_negatives: m = " + std::to_string(m) +
                                    " would exhaust " + std::to_string(positives.size()) +
                                    " positives");
  }
  auto query_row = bank.row(query);
  std::vector<NegativePick> ranked;
  ranked.reserve(positives.size());
  for (std::size_t idx : positives) {
    ranked.push_back({idx, dot(bank.row(idx), query_row)});
  }
  // Least similar first; equal similarities resolve toward the higher index.
  std::stable_sort(ranked.begin(), ranked.end(), [](const NegativePick& a, const NegativePick& b) {
    if (a.similarity != b.similarity) return a.similarity < b.similarity;
    return a.index > b.index;
  });
  ranked.resize(m);

  NegativeSelection out;
  out.negatives = ranked;
  std::unordered_set<std::size_t> dropped;
  for (const auto& n : ranked) dropped.insert(n.index);
  for (std::size_t idx : positives) {
    if (!dropped.contains(idx)) out.kept.push_back(idx);
  }
  return out;
}

NeighborSet discover(const MemoryBank& bank, std::size_t query, Strategy strategy,
                     std::size_t k, std::size_t m, kernels::Exec exec) {
  std::vector<PositivePick> picks;
  switch (strategy) {
    case Strategy::bfs: picks = bfs_positives(bank, query, k, exec); break;
    case Strategy::dfs: picks = dfs_positives(bank, query, k, exec); break;
    case Strategy::greedy: picks = greedy_positives(bank, query, k, exec); break;
  }
  std::vector<std::size_t> indices;
  indices.reserve(picks.size());
  for (const auto& p : picks) indices.push_back(p.index);
  NegativeSelection sel = sample_negatives(bank, query, indices, m);

  NeighborSet set;
  set.query = query;
  set.strategy = strategy;
  set.negatives = std::move(sel.negatives);
  std::unordered_set<std::size_t> kept(sel.kept.begin(), sel.kept.end());
  for (const auto& p : picks) {
    if (kept.contains(p.index)) set.positives.push_back(p);
  }
  return set;
}

NeighborSet discover(const MemoryBank& bank, std::size_t query, Strategy strategy,
                     std::size_t k, std::size_t m, std::size_t extra_uniform,
                     SeededRng& rng, kernels::Exec exec) {
  NeighborSet set = discover(bank, query, strategy, k, m, exec);
  if (extra_uniform == 0) return set;

  std::vector<char> blocked(bank.size(), 0);
  blocked[query] = 1;
  for (const auto& p : set.positives) blocked[p.index] = 1;
  for (const auto& n : set.negatives) blocked[n.index] = 1;
  std::size_t free_count = 0;
  for (char b : blocked) free_count += (b == 0);
  if (free_count < extra_uniform) {
    throw NotEnoughCandidates("discover: " + std::to_string(extra_uniform) +
                              " uniform negatives requested but only " +
                              std::to_string(free_count) + " instances remain");
  }
  auto query_row = bank.row(query);
  for (std::size_t drawn = 0; drawn < extra_uniform;) {
    std::size_t idx = static_cast<std::size_t>(rng.next_below(bank.size()));
    if (blocked[idx]) continue;
    blocked[idx] = 1;
    set.negatives.push_back({idx, dot(bank.row(idx), query_row)});
    ++drawn;
  }
  return set;
}

std::string neighbor_set_to_json(const NeighborSet& set) {
  json rec;
  rec["type"] = "neighbor_set";
  rec["query"] = set.query;
  rec["strategy"] = to_string(set.strategy);
  json pos = json::array();
  for (const auto& p : set.positives) {
    pos.push_back({{"index", p.index}, {"similarity", p.similarity}, {"parent", p.parent}});
  }
  json neg = json::array();
  for (const auto& n : set.negatives) {
    neg.push_back({{"index", n.index}, {"similarity", n.similarity}});
  }
  rec["positives"] = std::move(pos);
  rec["negatives"] = std::move(neg);
  return rec.dump();
}

NeighborSet neighbor_set_from_json(const std::string& line) {
  try {
    json rec = json::parse(line);
    NeighborSet set;
    set.query = rec.at("query").get<std::size_t>();
    set.strategy = strategy_from_string(rec.at("strategy").get<std::string>());
    for (const auto& p : rec.at("positives")) {
      set.positives.push_back({p.at("index").get<std::size_t>(),
                               p.at("similarity").get<double>(),
                               p.at("parent").get<std::size_t>()});
    }
    for (const auto& n : rec.at("negatives")) {
      set.negatives.push_back({n.at("index").get<std::size_t>(),
                               n.at("similarity").get<double>()});
    }
    return set;
  } catch (const json::exception& e) {
    throw ParseError(std::string("neighbor record: ") + e.what());
  }
}

}  // namespace suvr
