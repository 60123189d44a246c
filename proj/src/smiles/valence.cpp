//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <string_view>
#include <vector>

#include "csmiles/smiles.h"

namespace csmiles::smiles {
namespace {

int bond_weight(BondOrder order) {
  switch (order) {
  case BondOrder::kDouble:
    return 2;
  case BondOrder::kTriple:
    return 3;
  default:
    return 1;
  }
}

std::vector<int> base_valences(std::string_view element) {
  if (element == "B")
    return { 3 };
  if (element == "C" || element == "Si")
    return { 4 };
  if (element == "N" || element == "P")
    return { 3, 5 };
  if (element == "O")
    return { 2 };
  if (element == "S" || element == "Se")
    return { 2, 4, 6 };
  if (element == "F" || element == "Cl" || element == "Br" || element == "I")
    return { 1 };
  return {};
}

// Valences used to derive implicit hydrogens on bare atoms.
std::vector<int> bare_valences(std::string_view element) {
  if (!is_organic_subset(element))
    return {};
  return base_valences(element);
}

bool shifts_up_on_cation(std::string_view element) {
  return element == "N" || element == "O" || element == "S" || element == "P"
         || element == "Se";
}

}  // namespace

int bond_order_sum(const MolGraph &graph, int atom) {
  int sum = 0;
  for (const Bond &b: graph.bonds)
    if (b.i == atom || b.j == atom)
      sum += bond_weight(b.order);
  return sum;
}

std::vector<int> degrees(const MolGraph &graph) {
  std::vector<int> deg(graph.atoms.size(), 0);
  for (const Bond &b: graph.bonds) {
    ++deg[b.i];
    ++deg[b.j];
  }
  return deg;
}

int implicit_hydrogens(const MolGraph &graph, int atom) {
  const AtomDescriptor &a = graph.atoms[atom];
  const std::vector<int> valences = bare_valences(a.element);
  if (valences.empty())
    return 0;
  const int used = bond_order_sum(graph, atom);
  // Aromatic atoms only take the lowest valence, less one for the pi bond.
  if (a.aromatic)
    return std::max(0, valences.front() - used - 1);
  for (int v: valences)
    if (v >= used)
      return v - used;
  return 0;
}

int total_hydrogens(const MolGraph &graph, int atom) {
  const AtomDescriptor &a = graph.atoms[atom];
  return a.bracket ? a.explicit_h : implicit_hydrogens(graph, atom);
}

std::vector<int> allowed_valences(std::string_view element, int charge) {
  std::vector<int> allowed = base_valences(element);
  if (allowed.empty() || charge == 0)
    return allowed;

  std::vector<int> shifted;
  for (int v: allowed) {
    int s = v;
    if (charge > 0)
      s = shifts_up_on_cation(element) ? v + charge : v - charge;
    else
      s = v + charge;
    if (s >= 0)
      shifted.push_back(s);
  }
  return shifted;
}

std::vector<ValenceViolation> check_valence(const MolGraph &graph) {
  std::vector<ValenceViolation> out;
  for (int i = 0; i < static_cast<int>(graph.atoms.size()); ++i) {
    const AtomDescriptor &a = graph.atoms[i];
    std::vector<int> allowed = allowed_valences(a.element, a.charge);
    if (allowed.empty())
      continue;

    const int valence = bond_order_sum(graph, i) + total_hydrogens(graph, i);
    auto contains = [&](int v) {
      return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    };
    // Aromatic atoms get one unit of slack in place of kekulization.
    bool ok = contains(valence) || (a.aromatic && contains(valence + 1));
    if (!ok)
      out.push_back({ i, a.element, valence, std::move(allowed) });
  }
  return out;
}

}  // namespace csmiles::smiles
