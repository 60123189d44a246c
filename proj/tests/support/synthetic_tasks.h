//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Synthetic id-level tasks for the copy gate. Ids below 4 are sentinels.

#ifndef CSMILES_TESTS_SYNTHETIC_TASKS_H_
#define CSMILES_TESTS_SYNTHETIC_TASKS_H_

#include <random>
#include <vector>

#include "csmiles/engine/train.h"

namespace csmiles::testing {

struct SyntheticTask {
  int vocab_size;
  std::vector<engine::Example> train;
  std::vector<engine::Example> held_out;
};

inline std::vector<int> random_ids(std::mt19937_64 &rng, int lo, int hi, int min_len,
                                   int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len), tok(lo, hi);
  std::vector<int> out(len(rng));
  for (int &t: out)
    t = tok(rng);
  return out;
}

// Target = source over ids [4, 4 + k); SAM = identity.
inline SyntheticTask identity_task(int k, int n_train, int n_held, std::uint64_t seed,
                                   int min_len = 4, int max_len = 8) {
  std::mt19937_64 rng(seed);
  SyntheticTask task { 4 + k, {}, {} };
  for (int i = 0; i < n_train + n_held; ++i) {
    engine::Example ex;
    ex.source = random_ids(rng, 4, 4 + k - 1, min_len, max_len);
    ex.target = ex.source;
    const int n = static_cast<int>(ex.source.size());
    ex.sam = align::AlignmentMap(n, n);
    for (int j = 0; j < n; ++j)
      ex.sam.at(j, j) = 1;
    (i < n_train ? task.train : task.held_out).push_back(std::move(ex));
  }
  return task;
}

// Source over [4, 4 + k), target over the disjoint [4 + k, 4 + 2k) with
// target[i] = source[i] + k; SAM all zero.
inline SyntheticTask generation_task(int k, int n_train, int n_held, std::uint64_t seed,
                                     int min_len = 4, int max_len = 8) {
  std::mt19937_64 rng(seed);
  SyntheticTask task { 4 + 2 * k, {}, {} };
  for (int i = 0; i < n_train + n_held; ++i) {
    engine::Example ex;
    ex.source = random_ids(rng, 4, 4 + k - 1, min_len, max_len);
    for (int t: ex.source)
      ex.target.push_back(t + k);
    ex.sam = align::AlignmentMap(static_cast<int>(ex.target.size()),
                                 static_cast<int>(ex.source.size()));
    (i < n_train ? task.train : task.held_out).push_back(std::move(ex));
  }
  return task;
}

}  // namespace csmiles::testing

#endif  // CSMILES_TESTS_SYNTHETIC_TASKS_H_
