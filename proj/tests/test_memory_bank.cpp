#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "suvr/errors.hpp"
#include "suvr/memory_bank.hpp"
#include "suvr/numeric.hpp"

using namespace suvr;

TEST_CASE("construction yields unit rows, deterministic per seed") {
  MemoryBank a(20, 8, 42);
  MemoryBank b(20, 8, 42);
  MemoryBank c(20, 8, 43);
  CHECK(a.size() == 20);
  CHECK(a.dim() == 8);
  CHECK(a.momentum() == 0.5);
  CHECK(a.embeddings() == b.embeddings());
  CHECK(a.embeddings() != c.embeddings());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(norm2(a.row(i)) - 1.0) < 1e-12);
  }
}

TEST_CASE("from_rows renormalizes; restore demands unit rows and keeps bits") {
  Matrix rows(2, 2);
  rows(0, 0) = 3.0;
  rows(0, 1) = 4.0;
  rows(1, 0) = 0.0;
  rows(1, 1) = -2.0;
  MemoryBank bank = MemoryBank::from_rows(rows);
  CHECK(bank.row(0)[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(bank.row(1)[1] == -1.0);

  // restore: verbatim rows, bit for bit
  Matrix unit = bank.embeddings();
  MemoryBank restored = MemoryBank::restore(unit, 0.5);
  CHECK(restored.embeddings() == bank.embeddings());

  Matrix bad(1, 2);
  bad(0, 0) = 0.5;
  bad(0, 1) = 0.5;  // norm ~0.707, no longer unit
  CHECK_THROWS_AS(MemoryBank::restore(bad, 0.5), Error);
}

TEST_CASE("similarities equals per-row dot products") {
  MemoryBank bank(15, 6, 7);
  SeededRng rng(9);
  Vec v = l2_normalize(random_unit_rows(1, 6, rng).row(0));
  Vec sims = bank.similarities(v);
  REQUIRE(sims.size() == 15);
  for (std::size_t i = 0; i < 15; ++i) {
    CHECK(sims[i] == dot(bank.row(i), v));
  }
  Vec serial = bank.similarities(v, kernels::Exec::serial);
  CHECK(serial == sims);
}

TEST_CASE("ema_update matches the normalize(momentum*old + (1-momentum)*new) oracle") {
  for (double momentum : {0.0, 0.3, 0.5, 0.9, 1.0}) {
    MemoryBank bank(4, 5, 11, momentum);
    SeededRng rng(momentum == 0.0 ? 100 : static_cast<std::uint64_t>(momentum * 1000));
    Vec v(5);
    for (auto& e : v) e = rng.next_normal();
    l2_normalize_in_place(v);

    Vec old(bank.row(2).begin(), bank.row(2).end());
    Vec blended(5);
    for (std::size_t c = 0; c < 5; ++c) {
      blended[c] = momentum * old[c] + (1.0 - momentum) * v[c];
    }
    Vec expect = l2_normalize(blended);

    bank.ema_update(2, v);
    for (std::size_t c = 0; c < 5; ++c) CHECK(bank.row(2)[c] == expect[c]);
    CHECK(std::abs(norm2(bank.row(2)) - 1.0) < 1e-12);

    // other rows untouched
    MemoryBank pristine(4, 5, 11, momentum);
    for (std::size_t i : {0u, 1u, 3u}) {
      CHECK(std::equal(bank.row(i).begin(), bank.row(i).end(),
                       pristine.row(i).begin()));
    }
  }
}

TEST_CASE("ema_update with momentum=1 keeps the row (renormalized no-op)") {
  MemoryBank bank(3, 4, 5, 1.0);
  Vec before(bank.row(1).begin(), bank.row(1).end());
  SeededRng rng(6);
  Vec v(4);
  for (auto& e : v) e = rng.next_normal();
  l2_normalize_in_place(v);
  bank.ema_update(1, v);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(bank.row(1)[c] == doctest::Approx(before[c]).epsilon(1e-15));
  }
}

TEST_CASE("cancelling blend throws and leaves the row intact") {
  // momentum 0.5: update with v = -row makes the blend exactly zero
  MemoryBank bank(3, 4, 8, 0.5);
  Vec flipped(bank.row(0).begin(), bank.row(0).end());
  for (auto& e : flipped) e = -e;
  Vec before(bank.row(0).begin(), bank.row(0).end());
  CHECK_THROWS_AS(bank.ema_update(0, flipped), NormTooSmall);
  CHECK(std::equal(bank.row(0).begin(), bank.row(0).end(), before.begin()));
}

TEST_CASE("ema_update validates the index") {
  MemoryBank bank(3, 4, 8);
  Vec v{1.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(bank.ema_update(3, v), IndexOutOfRange);
}

TEST_CASE("top_k_excluding equals a full-sort oracle") {
  SeededRng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_below(40);
    Vec scores(n);
    for (auto& s : scores) {
      s = rng.next_normal();
      if (rng.next_below(4) == 0 && &s != scores.data()) s = scores[0];  // force ties
    }
    std::vector<std::size_t> excluded;
    if (rng.next_below(2) == 0) excluded.push_back(rng.next_below(n));
    const std::size_t avail = n - excluded.size();
    if (avail == 0) continue;
    const std::size_t k = 1 + rng.next_below(avail);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::erase_if(order, [&](std::size_t i) {
      return std::find(excluded.begin(), excluded.end(), i) != excluded.end();
    });
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    order.resize(k);

    CHECK(top_k_excluding(scores, k, excluded) == order);
  }
}

TEST_CASE("top_k_excluding rejects impossible requests") {
  Vec scores{0.3, 0.1, 0.2};
  std::vector<std::size_t> ex{0};
  CHECK_THROWS_AS(top_k_excluding(scores, 3, ex), NotEnoughCandidates);
  CHECK_NOTHROW(top_k_excluding(scores, 2, ex));
}
