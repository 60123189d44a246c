//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "csmiles/alignment.h"
#include "csmiles/error.h"
#include "support/micro_reactions.h"
#include "support/random_mol.h"

namespace csmiles::align {
namespace {

AlignmentMap from_cells(int rows, int cols,
                        const std::vector<std::pair<int, int>> &cells) {
  AlignmentMap m(rows, cols);
  for (auto [i, j]: cells)
    m.at(i, j) = 1;
  return m;
}

std::string dump(const AlignmentMap &m) {
  std::string out;
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j)
      if (m.at(i, j))
        out += "(" + std::to_string(i) + "," + std::to_string(j) + ")";
  }
  return out;
}

struct Reaction {
  std::string product, reactants;
};

std::vector<Reaction> sample_reactions() {
  std::vector<Reaction> out;
  for (const std::string &line:
       testing::read_lines(CSMILES_DATA_DIR "/sample_reactions.txt")) {
    std::string rxn = line.substr(line.find('\t') + 1);
    auto arrow = rxn.find(">>");
    out.push_back({ rxn.substr(arrow + 2), rxn.substr(0, arrow) });
  }
  return out;
}

// Random graph with every atom mapped 1..n, written from root 0.
std::string random_mapped(std::mt19937_64 &rng) {
  testing::RandomMolOptions opt;
  opt.allow_hydrogen_atoms = false;
  smiles::MolGraph g = testing::random_graph(rng, opt);
  for (int i = 0; i < static_cast<int>(g.atoms.size()); ++i) {
    smiles::AtomDescriptor &a = g.atoms[i];
    if (!a.bracket) {
      a.explicit_h = smiles::implicit_hydrogens(g, i);
      a.bracket = true;
    }
    a.atom_map = i + 1;
  }
  return smiles::write_smiles(g, 0);
}

TEST(BuildSamTest, Identity) {
  AlignmentMap sam = build_sam("[CH3:1][OH:2]", "[CH3:1][OH:2]");
  EXPECT_EQ(sam, from_cells(2, 2, { { 0, 0 }, { 1, 1 } }));
}

TEST(BuildSamTest, LeavingGroup) {
  AlignmentMap sam = build_sam("[CH3:1][OH:2]", "[CH3:1]Br");
  EXPECT_EQ(sam, from_cells(2, 2, { { 0, 0 } }));
}

TEST(BuildSamTest, BondChange) {
  AlignmentMap sam = build_sam("[C:1]=[O:2]", "[C:1][O:2]");
  EXPECT_EQ(sam, from_cells(2, 3, { { 0, 0 }, { 1, 2 } }));
  EXPECT_EQ(copy_labels(sam), (std::vector<int> { 0, 0 }));
}

TEST(BuildSamTest, HandTracedMicroReactions) {
  for (const auto &m: testing::micro_reactions()) {
    AlignmentMap sam = build_sam(m.product, m.reactants);
    AlignmentMap want = from_cells(m.rows, m.cols, m.cells);
    EXPECT_EQ(sam, want) << m.name << "\n got " << dump(sam) << "\nwant "
                         << dump(want);
  }
}

TEST(BuildSamTest, RawLevelBeforeProjection) {
  MappedSide p = prepare_side("[NH2:1][c:2]1[cH:3][cH:4][cH:5][cH:6][cH:7]1");
  MappedSide r = prepare_side("O=[N+:1]([O-])[c:2]1[cH:3][cH:4][cH:5][cH:6][cH:7]1");
  AlignmentMap raw = build_raw_sam(p, r);
  EXPECT_EQ(raw.rows, 14);
  EXPECT_EQ(raw.cols, 9);
  // The nitrogen pair is aligned on raw tokens but dropped on projection.
  EXPECT_EQ(raw.at(2, 0), 1);
  EXPECT_EQ(build_sam(p, r).row_any(2), false);
}

TEST(BuildSamTest, BackwardExtension) {
  // "(" before the seed atom pair is aligned only by the backward pass.
  MappedSide p = prepare_side("C([CH3:1])([OH:2])");
  MappedSide r = prepare_side("N([CH3:1])([OH:2])");
  AlignmentMap raw = build_raw_sam(p, r);
  EXPECT_EQ(raw.at(1, 1), 1);
  EXPECT_EQ(raw.at(4, 4), 1);
  EXPECT_EQ(raw.at(0, 0), 0);
}

TEST(BuildSamTest, DuplicateMaps) {
  EXPECT_THROW(build_sam("[CH3:1][OH:1]", "[CH3:1]O"), Error);
  try {
    build_sam("[CH3:1]O", "[CH3:1][OH:1]");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateAtomMap);
  }
}

TEST(SmoothTest, Examples) {
  AlignmentMap sam(1, 10);
  sam.at(0, 3) = 1;
  SmoothedAlignment s = smooth(sam, 0.1);
  EXPECT_NEAR(s.at(0, 3), 0.91, 1e-15);
  EXPECT_NEAR(s.at(0, 0), 0.01, 1e-15);
  SmoothedAlignment z = smooth(sam, 0.0);
  for (int j = 0; j < 10; ++j)
    EXPECT_EQ(z.at(0, j), sam.at(0, j));
}

TEST(CopyLabelsTest, Extremes) {
  AlignmentMap identity(3, 3), zero(3, 4);
  for (int i = 0; i < 3; ++i)
    identity.at(i, i) = 1;
  EXPECT_EQ(copy_labels(identity), (std::vector<int> { 0, 0, 0 }));
  EXPECT_EQ(copy_labels(zero), (std::vector<int> { 1, 1, 1 }));
}

// Raw cell survives projection iff the two decomposed token lists match.
TEST(SamPropertyTest, ProjectionConsistency) {
  for (const Reaction &rx: sample_reactions()) {
    MappedSide p = prepare_side(rx.product), r = prepare_side(rx.reactants);
    AlignmentMap raw = build_raw_sam(p, r);
    AlignmentMap sam = project_sam(raw, p, r);
    auto sub = [](const MappedSide &s, int k) {
      std::vector<std::string> out;
      for (std::size_t c = 0; c < s.csmiles.size(); ++c)
        if (s.csmiles.source_span[c] == k)
          out.push_back(s.csmiles.tokens[c].text);
      return out;
    };
    for (int i = 0; i < raw.rows; ++i) {
      for (int j = 0; j < raw.cols; ++j) {
        if (!raw.at(i, j))
          continue;
        bool any = false;
        for (int a = 0; a < sam.rows; ++a)
          for (int b = 0; b < sam.cols; ++b)
            any |= sam.at(a, b) && r.csmiles.source_span[a] == i
                   && p.csmiles.source_span[b] == j;
        ASSERT_EQ(any, sub(r, i) == sub(p, j)) << rx.reactants;
      }
    }
  }
}

TEST(SamPropertyTest, SmoothingBounds) {
  const double eps = 0.1;
  for (const Reaction &rx: sample_reactions()) {
    AlignmentMap sam = build_sam(rx.product, rx.reactants);
    SmoothedAlignment s = smooth(sam, eps);
    const double lo = eps / sam.cols, hi = 1 - eps + eps / sam.cols;
    for (double v: s.values) {
      ASSERT_GE(v, lo - 1e-15);
      ASSERT_LE(v, hi + 1e-15);
    }
  }
}

TEST(SamPropertyTest, SelfAlignment) {
  std::mt19937_64 rng(41);
  std::vector<std::string> inputs;
  for (const Reaction &rx: sample_reactions())
    inputs.push_back(rx.product);
  for (int k = 0; k < 300; ++k)
    inputs.push_back(random_mapped(rng));
  for (const std::string &x: inputs) {
    MappedSide side = prepare_side(x);
    AlignmentMap sam = build_sam(side, side);
    for (std::size_t c = 0; c < side.csmiles.size(); ++c) {
      const auto &raw = side.tokens[side.csmiles.source_span[c]];
      if (raw.is_atom()) {
        ASSERT_EQ(sam.at(c, c), 1) << x << " at " << c;
      }
    }
  }
}

TEST(SamPropertyTest, LabelComplementAndUniqueRows) {
  for (const Reaction &rx: sample_reactions()) {
    MappedSide p = prepare_side(rx.product), r = prepare_side(rx.reactants);
    AlignmentMap sam = build_sam(p, r);
    std::vector<int> y = copy_labels(sam);
    ASSERT_EQ(static_cast<int>(y.size()), sam.rows);
    for (int i = 0; i < sam.rows; ++i) {
      int ones = 0, atom_ones = 0;
      for (int j = 0; j < sam.cols; ++j) {
        ones += sam.at(i, j);
        atom_ones += sam.at(i, j) && p.csmiles.tokens[j].kind == codec::CTokenKind::kElement;
      }
      ASSERT_EQ(y[i] == 0, ones > 0);
      if (r.csmiles.tokens[i].kind == codec::CTokenKind::kElement) {
        ASSERT_LE(atom_ones, 1);
      }
    }
  }
}

}  // namespace
}  // namespace csmiles::align
