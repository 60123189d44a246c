//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "csmiles/smiles.h"

namespace csmiles::smiles {
namespace {

// Upper bound on explored leaves; highly symmetric graphs beyond this keep
// the best string found so far.
constexpr std::size_t kMaxLeaves = 20000;

using Key = std::vector<int>;

// Replaces per-atom keys by their dense rank in sorted key order.
std::vector<int> dense_rank(const std::vector<Key> &keys) {
  const int n = static_cast<int>(keys.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int> rank(n);
  int r = 0;
  for (int k = 0; k < n; ++k) {
    if (k > 0 && keys[order[k]] != keys[order[k - 1]])
      ++r;
    rank[order[k]] = r;
  }
  return rank;
}

int count_classes(const std::vector<int> &cls) {
  return cls.empty() ? 0 : *std::max_element(cls.begin(), cls.end()) + 1;
}

class Canonicalizer {
public:
  explicit Canonicalizer(const MolGraph &g): g_(g), n_(g.atoms.size()) {
    adj_.resize(n_);
    for (const Bond &b: g_.bonds) {
      adj_[b.i].push_back({ b.j, static_cast<int>(b.order) });
      adj_[b.j].push_back({ b.i, static_cast<int>(b.order) });
    }
  }

  std::vector<int> run() {
    if (n_ == 0)
      return {};
    std::vector<int> deg = degrees(g_);
    std::vector<Key> keys(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const AtomDescriptor &a = g_.atoms[i];
      int element_code = 0;
      for (char c: a.element)
        element_code = element_code * 128 + c;
      keys[i] = {
        deg[i],
        element_code,
        a.aromatic ? 1 : 0,
        a.charge,
        total_hydrogens(g_, static_cast<int>(i)),
        a.isotope.value_or(0),
        a.atom_map.value_or(0),
        a.chirality == Chirality::kNone ? 0 : 1,
      };
    }
    search(refine(dense_rank(keys)));
    return best_rank_;
  }

  const std::string &best() const { return best_; }

private:
  struct Nbr {
    int atom;
    int order;
  };

  std::vector<int> refine(std::vector<int> cls) const {
    int classes = count_classes(cls);
    while (true) {
      std::vector<Key> keys(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        std::vector<std::pair<int, int>> env;
        for (const Nbr &nb: adj_[i])
          env.emplace_back(cls[nb.atom], nb.order);
        std::sort(env.begin(), env.end());
        Key &k = keys[i];
        k.push_back(cls[i]);
        for (auto [c, o]: env) {
          k.push_back(c);
          k.push_back(o);
        }
      }
      std::vector<int> next = dense_rank(keys);
      int next_classes = count_classes(next);
      cls = std::move(next);
      if (next_classes == classes)
        return cls;
      classes = next_classes;
    }
  }

  void search(const std::vector<int> &cls) {
    if (leaves_ >= kMaxLeaves)
      return;

    // First (lowest) class with more than one member.
    std::vector<int> size(n_, 0);
    for (int c: cls)
      ++size[c];
    int tied = -1;
    for (std::size_t c = 0; c < n_; ++c) {
      if (size[c] > 1) {
        tied = static_cast<int>(c);
        break;
      }
    }

    if (tied < 0) {
      ++leaves_;
      std::string s = write_sorted(cls);
      if (best_rank_.empty() || s.size() < best_.size()
          || (s.size() == best_.size() && s < best_)) {
        best_ = std::move(s);
        best_rank_ = cls;
      }
      return;
    }

    for (std::size_t m = 0; m < n_; ++m) {
      if (cls[m] != tied)
        continue;
      std::vector<Key> keys(n_);
      for (std::size_t i = 0; i < n_; ++i)
        keys[i] = { cls[i], cls[i] == tied && i != m ? 1 : 0 };
      search(refine(dense_rank(keys)));
    }
  }

  // Components written from their lowest-ranked atom and joined in
  // lexicographic order.
  std::string write_sorted(const std::vector<int> &rank) const {
    int root = static_cast<int>(
        std::min_element(rank.begin(), rank.end()) - rank.begin());
    std::string joined = write_smiles(g_, root, rank);
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      std::size_t dot = joined.find('.', start);
      parts.push_back(joined.substr(start, dot - start));
      if (dot == std::string::npos)
        break;
      start = dot + 1;
    }
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (k > 0)
        out += '.';
      out += parts[k];
    }
    return out;
  }

  const MolGraph &g_;
  std::size_t n_;
  std::vector<std::vector<Nbr>> adj_;
  std::string best_;
  std::vector<int> best_rank_;
  std::size_t leaves_ = 0;
};

}  // namespace

std::vector<int> canonical_ranks(const MolGraph &graph) {
  return Canonicalizer(graph).run();
}

std::string canonicalize(const MolGraph &graph) {
  Canonicalizer c(graph);
  c.run();
  return c.best();
}

std::string canonical_smiles(std::string_view smiles) {
  return canonicalize(strip_atom_maps(parse(smiles)));
}

}  // namespace csmiles::smiles
