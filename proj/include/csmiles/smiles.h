//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_SMILES_H_
#define CSMILES_SMILES_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace csmiles::smiles {

enum class Chirality {
  kNone,
  kAnticlockwise,  // @
  kClockwise,      // @@
};

struct AtomDescriptor {
  std::string element;  // capitalized symbol, e.g. "C", "Cl", "Se"
  bool aromatic = false;
  int charge = 0;
  // Hydrogen count written inside brackets. Bare organic-subset atoms carry
  // their hydrogens implicitly; see total_hydrogens().
  int explicit_h = 0;
  Chirality chirality = Chirality::kNone;
  std::optional<int> isotope;
  std::optional<int> atom_map;
  bool bracket = false;

  bool operator==(const AtomDescriptor &) const = default;
};

enum class TokenKind {
  kAtom,
  kBond,
  kRingClosure,
  kBranchOpen,
  kBranchClose,
  kDot,
};

struct Token {
  TokenKind kind;
  std::string text;
  std::optional<AtomDescriptor> atom;
  std::size_t position = 0;

  bool is_atom() const { return kind == TokenKind::kAtom; }
  // Ring-closure number for kRingClosure tokens ("1" -> 1, "%12" -> 12).
  int ring_number() const;
};

using TokenSequence = std::vector<Token>;

enum class BondOrder {
  kSingle,
  kDouble,
  kTriple,
  kAromatic,
};

struct Bond {
  int i;
  int j;
  BondOrder order;

  bool operator==(const Bond &) const = default;
};

inline constexpr int kImplicitHydrogen = -1;

struct MolGraph {
  std::vector<AtomDescriptor> atoms;
  std::vector<Bond> bonds;
  // Per atom, the neighbor order that defines its @/@@ flag (kImplicitHydrogen
  // marks the bracket hydrogen). Filled by parse(); may be empty otherwise.
  std::vector<std::vector<int>> stereo_neighbors;
  // Per atom, the index of the Atom token it came from. Filled by parse().
  std::vector<std::size_t> atom_token;

  std::size_t num_atoms() const { return atoms.size(); }
  // Label-level equality: atoms and bonds in storage order.
  bool same_labels(const MolGraph &other) const {
    return atoms == other.atoms && bonds == other.bonds;
  }
};

// Elements allowed as bare (unbracketed) atoms.
bool is_organic_subset(std::string_view element);
// Elements that may be written lowercase (aromatic).
bool is_aromatic_capable(std::string_view element);
bool is_element_symbol(std::string_view symbol);

TokenSequence tokenize(std::string_view smiles);
MolGraph parse(const TokenSequence &tokens);
MolGraph parse(std::string_view smiles);

// Bond order sum counting aromatic bonds as 1.
int bond_order_sum(const MolGraph &graph, int atom);
std::vector<int> degrees(const MolGraph &graph);
// Implicit hydrogens an atom would carry if written bare, given its bonds.
int implicit_hydrogens(const MolGraph &graph, int atom);
int total_hydrogens(const MolGraph &graph, int atom);

// Writes the graph as SMILES by depth-first traversal from `root`.
// `rank` orders neighbors (lower first) and picks the start atom of every
// other component; an empty rank means atom index order.
std::string write_smiles(const MolGraph &graph, int root,
                         std::span<const int> rank = {});

// Canonical atom ranks (0..n-1) and the canonical string they produce.
std::vector<int> canonical_ranks(const MolGraph &graph);
std::string canonicalize(const MolGraph &graph);
// Convenience: parse, strip maps, canonicalize.
std::string canonical_smiles(std::string_view smiles);

struct ValenceViolation {
  int atom;
  std::string element;
  int valence;
  std::vector<int> allowed;
};

std::vector<ValenceViolation> check_valence(const MolGraph &graph);
// Allowed total valences for (element, charge); empty if unchecked.
std::vector<int> allowed_valences(std::string_view element, int charge);

MolGraph strip_atom_maps(MolGraph graph);

// Rewrites the atom tokens of `smiles` without atom maps, dropping brackets
// where the atom can be written bare. The token count and order are kept.
std::vector<std::string> unmapped_token_texts(const TokenSequence &tokens,
                                              const MolGraph &graph);
std::string strip_atom_maps_text(std::string_view smiles);

std::string atom_text(const AtomDescriptor &atom, int total_h,
                      int implicit_h_if_bare);

// Relabels atom i as perm[i]; bonds and stereo lists follow.
MolGraph permute_atoms(const MolGraph &graph, std::span<const int> perm);

// Connected components, each a sorted list of atom indices.
std::vector<std::vector<int>> connected_components(const MolGraph &graph);
// The atoms listed (in that order) with the bonds among them.
MolGraph induced_subgraph(const MolGraph &graph, std::span<const int> atoms);

}  // namespace csmiles::smiles

#endif  // CSMILES_SMILES_H_
