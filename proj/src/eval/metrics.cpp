//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/metrics.h"

#include <algorithm>
#include <numeric>

#include "csmiles/alignment.h"
#include "csmiles/error.h"
#include "csmiles/smiles.h"

namespace csmiles::metrics {
namespace {

double median(std::vector<int> v) {
  if (v.empty())
    return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int levenshtein(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({ sub, prev[j] + 1, cur[j - 1] + 1 });
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

EditDistanceSummary edit_distance_report(std::span<const ReactionText> corpus) {
  EditDistanceSummary s;
  std::vector<int> raw, csm;
  int le = 0;
  for (const ReactionText &rx: corpus) {
    const align::MappedSide p = align::prepare_side(rx.product);
    const align::MappedSide r = align::prepare_side(rx.reactants);
    EditDistanceRecord rec;
    rec.raw = levenshtein(p.unmapped, r.unmapped);
    const auto pt = p.csmiles.texts(), rt = r.csmiles.texts();
    rec.csmiles = levenshtein(pt, rt);
    raw.push_back(rec.raw);
    csm.push_back(rec.csmiles);
    le += rec.csmiles <= rec.raw;
    s.csmiles_better += rec.csmiles < rec.raw;
    s.csmiles_worse += rec.csmiles > rec.raw;
    s.records.push_back(rec);
  }
  const double n = static_cast<double>(s.records.size());
  if (n > 0) {
    s.mean_raw = std::accumulate(raw.begin(), raw.end(), 0.0) / n;
    s.mean_csmiles = std::accumulate(csm.begin(), csm.end(), 0.0) / n;
    s.mean_delta = s.mean_csmiles - s.mean_raw;
    s.fraction_csmiles_le_raw = le / n;
  }
  s.median_raw = median(raw);
  s.median_csmiles = median(csm);
  return s;
}

std::vector<std::string> canonical_molecule_set(std::string_view smiles) {
  smiles::MolGraph g = smiles::strip_atom_maps(smiles::parse(smiles));
  std::vector<std::string> out;
  for (const auto &comp: smiles::connected_components(g)) {
    const smiles::MolGraph sub = smiles::induced_subgraph(g, comp);
    out.push_back(smiles::canonicalize(sub));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_valid_smiles(std::string_view smiles) {
  try {
    return smiles::check_valence(smiles::parse(smiles)).empty();
  } catch (const Error &) {
    return false;
  }
}

std::map<int, double> topk_accuracy(const std::vector<std::vector<std::string>> &candidates,
                                    std::span<const std::string> gold,
                                    std::span<const int> ks) {
  if (candidates.size() != gold.size())
    throw Error(ErrorCode::kLengthMismatch, "candidate and gold counts differ");
  std::map<int, double> acc;
  for (int k: ks)
    acc[k] = 0;
  for (std::size_t r = 0; r < gold.size(); ++r) {
    std::vector<std::string> want;
    try {
      want = canonical_molecule_set(gold[r]);
    } catch (const Error &e) {
      throw Error(ErrorCode::kGoldParseError,
                  "gold " + std::to_string(r) + ": " + e.what());
    }
    int first_hit = -1;
    for (std::size_t c = 0; c < candidates[r].size() && first_hit < 0; ++c) {
      try {
        if (canonical_molecule_set(candidates[r][c]) == want)
          first_hit = static_cast<int>(c);
      } catch (const Error &) {
      }
    }
    for (int k: ks)
      if (first_hit >= 0 && first_hit < k)
        acc[k] += 1;
  }
  for (auto &[k, v]: acc)
    v = gold.empty() ? 0 : v / static_cast<double>(gold.size());
  return acc;
}

std::map<int, double> topk_validity(const std::vector<std::vector<std::string>> &candidates,
                                    std::span<const int> ks) {
  std::map<int, double> out;
  for (int k: ks) {
    double total = 0;
    for (const auto &list: candidates) {
      const std::size_t n = std::min<std::size_t>(k, list.size());
      if (n == 0)
        continue;
      int valid = 0;
      for (std::size_t c = 0; c < n; ++c)
        valid += is_valid_smiles(list[c]);
      total += static_cast<double>(valid) / n;
    }
    out[k] = candidates.empty() ? 0 : total / candidates.size();
  }
  return out;
}

}  // namespace csmiles::metrics
