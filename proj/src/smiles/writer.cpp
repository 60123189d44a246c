//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "csmiles/error.h"
#include "csmiles/smiles.h"

namespace csmiles::smiles {
namespace {

std::string charge_text(int charge) {
  if (charge == 0)
    return {};
  std::string out(1, charge > 0 ? '+' : '-');
  if (std::abs(charge) > 1)
    out += std::to_string(std::abs(charge));
  return out;
}

std::string symbol_text(const AtomDescriptor &atom) {
  std::string sym = atom.element;
  if (atom.aromatic)
    sym[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sym[0])));
  return sym;
}

// Parity of the permutation taking `from` to `to`; -1 if they are not
// permutations of each other.
int permutation_parity(const std::vector<int> &from, const std::vector<int> &to) {
  if (from.size() != to.size())
    return -1;
  std::vector<int> pos;
  pos.reserve(to.size());
  std::vector<bool> used(from.size(), false);
  for (int x: to) {
    std::size_t j = 0;
    while (j < from.size() && (used[j] || from[j] != x))
      ++j;
    if (j == from.size())
      return -1;
    used[j] = true;
    pos.push_back(static_cast<int>(j));
  }
  int inversions = 0;
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = i + 1; j < pos.size(); ++j)
      if (pos[i] > pos[j])
        ++inversions;
  return inversions % 2;
}

class Writer {
public:
  Writer(const MolGraph &graph, std::span<const int> rank)
      : g_(graph), n_(static_cast<int>(graph.atoms.size())),
        rank_(rank.begin(), rank.end()) {
    if (rank_.empty()) {
      rank_.resize(n_);
      std::iota(rank_.begin(), rank_.end(), 0);
    }
    adj_.resize(n_);
    for (int b = 0; b < static_cast<int>(g_.bonds.size()); ++b) {
      adj_[g_.bonds[b].i].push_back({ g_.bonds[b].j, b });
      adj_[g_.bonds[b].j].push_back({ g_.bonds[b].i, b });
    }
    for (auto &nbrs: adj_)
      std::sort(nbrs.begin(), nbrs.end(), [&](const Edge &x, const Edge &y) {
        return rank_[x.atom] < rank_[y.atom];
      });

    preorder_.assign(n_, -1);
    parent_.assign(n_, -1);
    parent_bond_.assign(n_, -1);
    children_.resize(n_);
    openers_.resize(n_);
    closers_.resize(n_);
    ring_seen_.assign(g_.bonds.size(), false);
    ring_digit_.assign(g_.bonds.size(), -1);
  }

  std::string write(int root) {
    std::string out;
    std::vector<int> starts { root };
    std::vector<int> order(n_);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return rank_[a] < rank_[b]; });

    explore(root);
    for (int a: order) {
      if (preorder_[a] < 0) {
        starts.push_back(a);
        explore(a);
      }
    }
    for (std::size_t c = 0; c < starts.size(); ++c) {
      if (c > 0)
        out += '.';
      emit(starts[c], out);
    }
    return out;
  }

private:
  struct Edge {
    int atom;
    int bond;
  };

  void explore(int u) {
    preorder_[u] = counter_++;
    for (const Edge &e: adj_[u]) {
      if (e.bond == parent_bond_[u])
        continue;
      if (preorder_[e.atom] < 0) {
        parent_[e.atom] = u;
        parent_bond_[e.atom] = e.bond;
        children_[u].push_back(e.atom);
        explore(e.atom);
      } else if (!ring_seen_[e.bond]) {
        ring_seen_[e.bond] = true;
        // e.atom was reached first, so it opens the ring and u closes it.
        openers_[e.atom].push_back(e.bond);
        closers_[u].push_back(e.bond);
      }
    }
  }

  int other(int bond, int atom) const {
    const Bond &b = g_.bonds[bond];
    return b.i == atom ? b.j : b.i;
  }

  std::string bond_symbol(int bond) const {
    const Bond &b = g_.bonds[bond];
    const bool both_aromatic = g_.atoms[b.i].aromatic && g_.atoms[b.j].aromatic;
    switch (b.order) {
    case BondOrder::kSingle:
      return both_aromatic ? "-" : "";
    case BondOrder::kDouble:
      return "=";
    case BondOrder::kTriple:
      return "#";
    case BondOrder::kAromatic:
      return both_aromatic ? "" : ":";
    }
    return "";
  }

  static std::string digit_text(int d) {
    if (d < 10)
      return std::to_string(d);
    return "%" + std::to_string(d);
  }

  int take_digit() {
    for (int d = 1;; ++d) {
      if (d >= static_cast<int>(digit_used_.size()))
        digit_used_.resize(d + 1, false);
      if (!digit_used_[d]) {
        digit_used_[d] = true;
        return d;
      }
    }
  }

  AtomDescriptor oriented_atom(int u, const std::vector<int> &closers,
                               const std::vector<int> &openers) const {
    AtomDescriptor atom = g_.atoms[u];
    if (atom.chirality == Chirality::kNone
        || u >= static_cast<int>(g_.stereo_neighbors.size())
        || g_.stereo_neighbors[u].empty())
      return atom;

    std::vector<int> written;
    if (parent_[u] >= 0)
      written.push_back(parent_[u]);
    if (total_hydrogens(g_, u) > 0)
      written.push_back(kImplicitHydrogen);
    for (int b: closers)
      written.push_back(other(b, u));
    for (int b: openers)
      written.push_back(other(b, u));
    for (int c: children_[u])
      written.push_back(c);

    if (permutation_parity(g_.stereo_neighbors[u], written) == 1)
      atom.chirality = atom.chirality == Chirality::kClockwise
                           ? Chirality::kAnticlockwise
                           : Chirality::kClockwise;
    return atom;
  }

  void emit(int u, std::string &out) {
    std::vector<int> closers = closers_[u];
    std::sort(closers.begin(), closers.end(),
              [&](int a, int b) { return ring_digit_[a] < ring_digit_[b]; });
    std::vector<int> openers = openers_[u];
    std::sort(openers.begin(), openers.end(), [&](int a, int b) {
      return preorder_[other(a, u)] < preorder_[other(b, u)];
    });

    const AtomDescriptor atom = oriented_atom(u, closers, openers);
    out += atom_text(atom, total_hydrogens(g_, u), implicit_hydrogens(g_, u));

    std::vector<int> released;
    for (int b: closers) {
      out += digit_text(ring_digit_[b]);
      released.push_back(ring_digit_[b]);
    }
    for (int b: openers) {
      ring_digit_[b] = take_digit();
      out += bond_symbol(b) + digit_text(ring_digit_[b]);
    }
    for (int d: released)
      digit_used_[d] = false;

    const auto &kids = children_[u];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const std::string sym = bond_symbol(parent_bond_[kids[k]]);
      if (k + 1 < kids.size()) {
        out += '(';
        out += sym;
        emit(kids[k], out);
        out += ')';
      } else {
        out += sym;
        emit(kids[k], out);
      }
    }
  }

  const MolGraph &g_;
  int n_;
  std::vector<int> rank_;
  std::vector<std::vector<Edge>> adj_;
  std::vector<int> preorder_;
  std::vector<int> parent_;
  std::vector<int> parent_bond_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> openers_;
  std::vector<std::vector<int>> closers_;
  std::vector<bool> ring_seen_;
  std::vector<int> ring_digit_;
  std::vector<bool> digit_used_;
  int counter_ = 0;
};

}  // namespace

std::string atom_text(const AtomDescriptor &atom, int total_h,
                      int implicit_h_if_bare) {
  const bool bare = is_organic_subset(atom.element) && atom.charge == 0
                    && !atom.isotope && atom.chirality == Chirality::kNone
                    && !atom.atom_map && total_h == implicit_h_if_bare
                    && (!atom.aromatic || atom.element.size() == 1);
  if (bare)
    return symbol_text(atom);

  std::string out = "[";
  if (atom.isotope)
    out += std::to_string(*atom.isotope);
  out += symbol_text(atom);
  if (atom.chirality == Chirality::kAnticlockwise)
    out += "@";
  else if (atom.chirality == Chirality::kClockwise)
    out += "@@";
  if (total_h > 0) {
    out += 'H';
    if (total_h > 1)
      out += std::to_string(total_h);
  }
  out += charge_text(atom.charge);
  if (atom.atom_map)
    out += ":" + std::to_string(*atom.atom_map);
  out += ']';
  return out;
}

std::string write_smiles(const MolGraph &graph, int root,
                         std::span<const int> rank) {
  if (root < 0 || root >= static_cast<int>(graph.atoms.size()))
    throw Error(ErrorCode::kInvalidRoot,
                "root " + std::to_string(root) + " out of range");
  if (!rank.empty() && rank.size() != graph.atoms.size())
    throw Error(ErrorCode::kInvalidRoot, "rank size does not match atom count");
  return Writer(graph, rank).write(root);
}

MolGraph strip_atom_maps(MolGraph graph) {
  for (AtomDescriptor &a: graph.atoms)
    a.atom_map.reset();
  return graph;
}

std::vector<std::string> unmapped_token_texts(const TokenSequence &tokens,
                                              const MolGraph &graph) {
  std::vector<std::string> texts;
  texts.reserve(tokens.size());
  for (const Token &t: tokens)
    texts.push_back(t.text);
  for (int a = 0; a < static_cast<int>(graph.atoms.size()); ++a) {
    AtomDescriptor atom = graph.atoms[a];
    atom.atom_map.reset();
    texts[graph.atom_token[a]] = atom_text(atom, total_hydrogens(graph, a),
                                           implicit_hydrogens(graph, a));
  }
  return texts;
}

std::string strip_atom_maps_text(std::string_view smiles) {
  TokenSequence tokens = tokenize(smiles);
  MolGraph graph = parse(tokens);
  std::string out;
  for (const std::string &t: unmapped_token_texts(tokens, graph))
    out += t;
  return out;
}

MolGraph permute_atoms(const MolGraph &graph, std::span<const int> perm) {
  const std::size_t n = graph.atoms.size();
  MolGraph out;
  out.atoms.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.atoms[perm[i]] = graph.atoms[i];
  for (const Bond &b: graph.bonds)
    out.bonds.push_back({ perm[b.i], perm[b.j], b.order });
  if (graph.stereo_neighbors.size() == n) {
    out.stereo_neighbors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto &dst = out.stereo_neighbors[perm[i]];
      for (int x: graph.stereo_neighbors[i])
        dst.push_back(x < 0 ? x : perm[x]);
    }
  }
  if (graph.atom_token.size() == n) {
    out.atom_token.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      out.atom_token[perm[i]] = graph.atom_token[i];
  }
  return out;
}

}  // namespace csmiles::smiles
