//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "csmiles/error.h"
#include "csmiles/smiles.h"

namespace csmiles::smiles {
namespace {

constexpr int kPendingRingSlot = -2;

BondOrder bond_from_text(const std::string &text) {
  switch (text.front()) {
  case '=':
    return BondOrder::kDouble;
  case '#':
    return BondOrder::kTriple;
  case ':':
    return BondOrder::kAromatic;
  default:
    // '-', and '/' '\' which carry no graph semantics here.
    return BondOrder::kSingle;
  }
}

struct OpenRing {
  int atom;
  std::optional<BondOrder> order;
  std::size_t stereo_slot;
};

class Parser {
public:
  explicit Parser(const TokenSequence &tokens): tokens_(tokens) { }

  MolGraph run() {
    for (std::size_t k = 0; k < tokens_.size(); ++k) {
      const Token &tok = tokens_[k];
      switch (tok.kind) {
      case TokenKind::kAtom:
        add_atom(tok, k);
        break;
      case TokenKind::kBond:
        if (prev_ < 0)
          fail(ErrorCode::kDanglingBond, k, "bond without a preceding atom");
        if (pending_)
          fail(ErrorCode::kDanglingBond, k, "two consecutive bonds");
        pending_ = bond_from_text(tok.text);
        break;
      case TokenKind::kRingClosure:
        ring_closure(tok, k);
        break;
      case TokenKind::kBranchOpen:
        if (prev_ < 0 || last_kind_ == TokenKind::kBranchOpen)
          fail(ErrorCode::kUnbalancedBranch, k, "branch without an atom");
        if (pending_)
          fail(ErrorCode::kDanglingBond, k, "bond before a branch");
        branches_.push_back(prev_);
        break;
      case TokenKind::kBranchClose:
        if (branches_.empty())
          fail(ErrorCode::kUnbalancedBranch, k, "unmatched ')'");
        if (last_kind_ == TokenKind::kBranchOpen)
          fail(ErrorCode::kUnbalancedBranch, k, "empty branch");
        if (pending_)
          fail(ErrorCode::kDanglingBond, k, "bond before ')'");
        prev_ = branches_.back();
        branches_.pop_back();
        break;
      case TokenKind::kDot:
        if (pending_)
          fail(ErrorCode::kDanglingBond, k, "bond before '.'");
        if (!branches_.empty())
          fail(ErrorCode::kUnbalancedBranch, k, "'.' inside a branch");
        if (prev_ < 0)
          fail(ErrorCode::kDanglingBond, k, "'.' without a preceding atom");
        prev_ = -1;
        break;
      }
      last_kind_ = tok.kind;
    }

    if (pending_)
      throw Error(ErrorCode::kDanglingBond, "bond at end of input");
    if (!branches_.empty())
      throw Error(ErrorCode::kUnbalancedBranch, "unclosed '('");
    if (!rings_.empty())
      throw Error(ErrorCode::kUnmatchedRingClosure,
                  "ring bond " + std::to_string(rings_.begin()->first)
                      + " is never closed");
    if (graph_.atoms.empty())
      throw Error(ErrorCode::kEmptyInput, "no atoms");
    return std::move(graph_);
  }

private:
  [[noreturn]] void fail(ErrorCode code, std::size_t k, const char *why) {
    throw Error(code, std::string(why) + " (token " + std::to_string(k) + ")");
  }

  BondOrder default_order(int a, int b) const {
    return graph_.atoms[a].aromatic && graph_.atoms[b].aromatic
               ? BondOrder::kAromatic
               : BondOrder::kSingle;
  }

  void add_bond(int a, int b, BondOrder order, std::size_t k) {
    auto key = std::minmax(a, b);
    if (!bond_set_.insert(key).second)
      fail(ErrorCode::kDuplicateBond, k, "atoms bonded twice");
    graph_.bonds.push_back({ a, b, order });
  }

  void add_atom(const Token &tok, std::size_t k) {
    const int idx = static_cast<int>(graph_.atoms.size());
    graph_.atoms.push_back(*tok.atom);
    graph_.atom_token.push_back(k);
    graph_.stereo_neighbors.emplace_back();

    if (prev_ >= 0) {
      add_bond(prev_, idx, pending_.value_or(default_order(prev_, idx)), k);
      graph_.stereo_neighbors[prev_].push_back(idx);
      graph_.stereo_neighbors[idx].push_back(prev_);
    }
    if (tok.atom->bracket && tok.atom->explicit_h > 0)
      graph_.stereo_neighbors[idx].push_back(kImplicitHydrogen);

    pending_.reset();
    prev_ = idx;
  }

  void ring_closure(const Token &tok, std::size_t k) {
    if (prev_ < 0)
      fail(ErrorCode::kUnmatchedRingClosure, k,
           "ring bond without a preceding atom");
    const int number = tok.ring_number();
    auto &stereo = graph_.stereo_neighbors;

    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_.emplace(number, OpenRing { prev_, pending_, stereo[prev_].size() });
      stereo[prev_].push_back(kPendingRingSlot);
      pending_.reset();
      return;
    }

    const OpenRing open = it->second;
    rings_.erase(it);
    if (open.atom == prev_)
      fail(ErrorCode::kUnmatchedRingClosure, k, "ring bond to itself");
    if (open.order && pending_ && *open.order != *pending_)
      fail(ErrorCode::kUnmatchedRingClosure, k, "conflicting ring bond orders");

    BondOrder order = open.order ? *open.order
                                 : pending_.value_or(
                                     default_order(open.atom, prev_));
    add_bond(open.atom, prev_, order, k);
    stereo[open.atom][open.stereo_slot] = prev_;
    stereo[prev_].push_back(open.atom);
    pending_.reset();
  }

  const TokenSequence &tokens_;
  MolGraph graph_;
  int prev_ = -1;
  std::optional<BondOrder> pending_;
  std::vector<int> branches_;
  std::map<int, OpenRing> rings_;
  std::set<std::pair<int, int>> bond_set_;
  std::optional<TokenKind> last_kind_;
};

}  // namespace

MolGraph parse(const TokenSequence &tokens) {
  if (tokens.empty())
    throw Error(ErrorCode::kEmptyInput, "no tokens");
  return Parser(tokens).run();
}

MolGraph parse(std::string_view smiles) {
  return parse(tokenize(smiles));
}

std::vector<std::vector<int>> connected_components(const MolGraph &graph) {
  const int n = static_cast<int>(graph.atoms.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i)
    parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const Bond &b: graph.bonds)
    parent[find(b.i)] = find(b.j);

  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i)
    groups[find(i)].push_back(i);

  std::vector<std::vector<int>> out;
  for (auto &[root, atoms]: groups)
    out.push_back(std::move(atoms));
  std::sort(out.begin(), out.end());
  return out;
}

MolGraph induced_subgraph(const MolGraph &graph, std::span<const int> atoms) {
  std::vector<int> index(graph.atoms.size(), -1);
  MolGraph sub;
  for (int a: atoms) {
    index[a] = static_cast<int>(sub.atoms.size());
    sub.atoms.push_back(graph.atoms[a]);
  }
  for (const Bond &b: graph.bonds)
    if (index[b.i] >= 0 && index[b.j] >= 0)
      sub.bonds.push_back({ index[b.i], index[b.j], b.order });
  if (!graph.stereo_neighbors.empty()) {
    for (int a: atoms) {
      std::vector<int> ref;
      for (int x: graph.stereo_neighbors[a])
        ref.push_back(x < 0 ? x : index[x]);
      sub.stereo_neighbors.push_back(std::move(ref));
    }
  }
  return sub;
}

}  // namespace csmiles::smiles
