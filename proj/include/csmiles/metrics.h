//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_METRICS_H_
#define CSMILES_METRICS_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace csmiles::metrics {

int levenshtein(std::span<const std::string> a, std::span<const std::string> b);

struct ReactionText {
  std::string product;    // atom-mapped
  std::string reactants;  // atom-mapped, '.'-joined
};

struct EditDistanceRecord {
  int raw = 0;
  int csmiles = 0;
};

struct EditDistanceSummary {
  std::vector<EditDistanceRecord> records;
  double mean_raw = 0;
  double mean_csmiles = 0;
  double median_raw = 0;
  double median_csmiles = 0;
  double mean_delta = 0;  // csmiles - raw
  double fraction_csmiles_le_raw = 0;
  int csmiles_better = 0;
  int csmiles_worse = 0;
};

// Distances use map-free tokens on both sides.
EditDistanceSummary edit_distance_report(std::span<const ReactionText> corpus);

// Sorted canonical strings of the '.'-separated molecules, maps stripped.
// Throws on parse failure.
std::vector<std::string> canonical_molecule_set(std::string_view smiles);

// Parses, then checks valence.
bool is_valid_smiles(std::string_view smiles);

inline const std::vector<int> kDefaultK = { 1, 3, 5, 10 };

// candidates[r] is the ranked list for record r. GoldParseError on a bad gold.
std::map<int, double> topk_accuracy(const std::vector<std::vector<std::string>> &candidates,
                                    std::span<const std::string> gold,
                                    std::span<const int> ks = kDefaultK);

// Fraction of the first k candidates that are valid, averaged over records
// (records with fewer than k candidates average over what they have).
std::map<int, double> topk_validity(const std::vector<std::vector<std::string>> &candidates,
                                    std::span<const int> ks = kDefaultK);

}  // namespace csmiles::metrics

#endif  // CSMILES_METRICS_H_
