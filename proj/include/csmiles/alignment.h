//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_ALIGNMENT_H_
#define CSMILES_ALIGNMENT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "csmiles/csmiles.h"
#include "csmiles/smiles.h"

namespace csmiles::align {

// Binary matrix; rows index reactant tokens, columns product tokens.
struct AlignmentMap {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;

  AlignmentMap() = default;
  AlignmentMap(int r, int c): rows(r), cols(c), cells(std::size_t(r) * c, 0) {}

  std::uint8_t &at(int i, int j) { return cells[std::size_t(i) * cols + j]; }
  std::uint8_t at(int i, int j) const { return cells[std::size_t(i) * cols + j]; }
  bool row_any(int i) const;
  int count() const;

  bool operator==(const AlignmentMap &) const = default;
};

struct SmoothedAlignment {
  int rows = 0;
  int cols = 0;
  double epsilon = 0.0;
  std::vector<double> values;

  double at(int i, int j) const { return values[std::size_t(i) * cols + j]; }
};

// One side of a reaction: the atom-mapped tokens plus the map-free forms the
// model sees. Token positions agree across all three representations.
struct MappedSide {
  std::string mapped;
  smiles::TokenSequence tokens;
  smiles::MolGraph graph;
  std::vector<std::string> unmapped;  // per raw token
  codec::CSmilesSequence csmiles;     // source_span indexes `tokens`

  std::string unmapped_smiles() const;
};

MappedSide prepare_side(std::string_view mapped_smiles);

AlignmentMap build_raw_sam(const MappedSide &product, const MappedSide &reactants);
AlignmentMap project_sam(const AlignmentMap &raw, const MappedSide &product,
                         const MappedSide &reactants);

AlignmentMap build_sam(const MappedSide &product, const MappedSide &reactants);
AlignmentMap build_sam(std::string_view mapped_product,
                       std::string_view mapped_reactants);

SmoothedAlignment smooth(const AlignmentMap &sam, double epsilon);

// 1 = generate (row all zero), 0 = copy.
std::vector<int> copy_labels(const AlignmentMap &sam);

}  // namespace csmiles::align

#endif  // CSMILES_ALIGNMENT_H_
