//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/alignment.h"

#include <algorithm>
#include <unordered_map>

#include "csmiles/error.h"

namespace csmiles::align {
namespace {

std::optional<int> map_of(const smiles::Token &t) {
  return t.is_atom() ? t.atom->atom_map : std::nullopt;
}

std::unordered_map<int, int> map_index(const MappedSide &side,
                                       std::string_view what) {
  std::unordered_map<int, int> index;
  for (int k = 0; k < static_cast<int>(side.tokens.size()); ++k) {
    auto m = map_of(side.tokens[k]);
    if (!m)
      continue;
    if (!index.emplace(*m, k).second)
      throw Error(ErrorCode::kDuplicateAtomMap,
                  "atom map " + std::to_string(*m) + " repeated in " + std::string(what));
  }
  return index;
}

// Pair test used while walking forward from an atom-mapped seed.
bool tokens_match(const MappedSide &r, int i, const MappedSide &p, int j) {
  const smiles::Token &a = r.tokens[i], &b = p.tokens[j];
  if (a.is_atom() != b.is_atom())
    return false;
  if (!a.is_atom())
    return a.text == b.text;
  auto ma = map_of(a), mb = map_of(b);
  if (ma || mb)
    return ma == mb;
  return r.unmapped[i] == p.unmapped[j];
}

// Half-open range of C-SMILES positions per raw token.
std::vector<std::pair<int, int>> spans(const MappedSide &side) {
  std::vector<std::pair<int, int>> out(side.tokens.size(), { 0, 0 });
  const auto &src = side.csmiles.source_span;
  for (int k = 0; k < static_cast<int>(src.size()); ++k) {
    auto &s = out[src[k]];
    if (s.first == s.second)
      s = { k, k + 1 };
    else
      s.second = k + 1;
  }
  return out;
}

}  // namespace

bool AlignmentMap::row_any(int i) const {
  for (int j = 0; j < cols; ++j)
    if (at(i, j))
      return true;
  return false;
}

int AlignmentMap::count() const {
  return static_cast<int>(std::count(cells.begin(), cells.end(), 1));
}

std::string MappedSide::unmapped_smiles() const {
  std::string out;
  for (const std::string &t: unmapped)
    out += t;
  return out;
}

MappedSide prepare_side(std::string_view mapped_smiles) {
  MappedSide side;
  side.mapped = std::string(mapped_smiles);
  side.tokens = smiles::tokenize(mapped_smiles);
  side.graph = smiles::parse(side.tokens);
  map_index(side, "one side");
  side.unmapped = smiles::unmapped_token_texts(side.tokens, side.graph);
  side.csmiles = codec::encode(smiles::tokenize(side.unmapped_smiles()));
  return side;
}

AlignmentMap build_raw_sam(const MappedSide &product, const MappedSide &reactants) {
  const int nr = static_cast<int>(reactants.tokens.size());
  const int np = static_cast<int>(product.tokens.size());
  AlignmentMap sam(nr, np);
  const auto product_maps = map_index(product, "product");
  map_index(reactants, "reactants");

  for (int i0 = 0; i0 < nr; ++i0) {
    auto m = map_of(reactants.tokens[i0]);
    if (!m)
      continue;
    auto it = product_maps.find(*m);
    if (it == product_maps.end())
      continue;
    for (int i = i0, j = it->second;
         i < nr && j < np && tokens_match(reactants, i, product, j); ++i, ++j)
      sam.at(i, j) = 1;
  }

  // Adjacent identical non-atom tokens around every aligned atom pair.
  AlignmentMap seeds = sam;
  auto extend = [&](int i, int j, int step) {
    for (i += step, j += step; i >= 0 && j >= 0 && i < nr && j < np; i += step, j += step) {
      const auto &a = reactants.tokens[i], &b = product.tokens[j];
      if (a.is_atom() || b.is_atom() || a.text != b.text)
        break;
      sam.at(i, j) = 1;
    }
  };
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < np; ++j)
      if (seeds.at(i, j) && reactants.tokens[i].is_atom()) {
        extend(i, j, 1);
        extend(i, j, -1);
      }
  return sam;
}

AlignmentMap project_sam(const AlignmentMap &raw, const MappedSide &product,
                         const MappedSide &reactants) {
  AlignmentMap sam(static_cast<int>(reactants.csmiles.size()),
                   static_cast<int>(product.csmiles.size()));
  const auto rs = spans(reactants), ps = spans(product);
  const auto &rt = reactants.csmiles.tokens, &pt = product.csmiles.tokens;
  for (int i = 0; i < raw.rows; ++i) {
    for (int j = 0; j < raw.cols; ++j) {
      if (!raw.at(i, j))
        continue;
      auto [r0, r1] = rs[i];
      auto [p0, p1] = ps[j];
      if (r1 - r0 != p1 - p0
          || !std::equal(rt.begin() + r0, rt.begin() + r1, pt.begin() + p0))
        continue;
      for (int k = 0; k < r1 - r0; ++k)
        sam.at(r0 + k, p0 + k) = 1;
    }
  }
  return sam;
}

AlignmentMap build_sam(const MappedSide &product, const MappedSide &reactants) {
  return project_sam(build_raw_sam(product, reactants), product, reactants);
}

AlignmentMap build_sam(std::string_view mapped_product,
                       std::string_view mapped_reactants) {
  return build_sam(prepare_side(mapped_product), prepare_side(mapped_reactants));
}

SmoothedAlignment smooth(const AlignmentMap &sam, double epsilon) {
  SmoothedAlignment out;
  out.rows = sam.rows;
  out.cols = sam.cols;
  out.epsilon = epsilon;
  out.values.resize(sam.cells.size());
  const double u = sam.cols > 0 ? 1.0 / sam.cols : 0.0;
  for (std::size_t k = 0; k < sam.cells.size(); ++k)
    out.values[k] = (1.0 - epsilon) * sam.cells[k] + epsilon * u;
  return out;
}

std::vector<int> copy_labels(const AlignmentMap &sam) {
  std::vector<int> y(sam.rows);
  for (int i = 0; i < sam.rows; ++i)
    y[i] = sam.row_any(i) ? 0 : 1;
  return y;
}

}  // namespace csmiles::align
