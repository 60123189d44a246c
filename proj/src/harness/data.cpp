//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <charconv>
#include <fstream>

#include "csmiles/error.h"
#include "csmiles/harness.h"
#include "csmiles/smiles.h"

namespace csmiles::harness {
namespace {

using smiles::MolGraph;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

// A molecule ready for rooted writing.
struct Molecule {
  MolGraph graph;
  std::vector<int> rank;
  int root = 0;
  std::string key;  // map-free canonical string

  explicit Molecule(MolGraph g) : graph(std::move(g)) {
    const MolGraph bare = smiles::strip_atom_maps(graph);
    rank = smiles::canonical_ranks(bare);
    root = static_cast<int>(std::min_element(rank.begin(), rank.end()) - rank.begin());
    key = smiles::canonicalize(bare);
  }

  int find_map(int map) const {
    for (std::size_t i = 0; i < graph.atoms.size(); ++i)
      if (graph.atoms[i].atom_map == map)
        return static_cast<int>(i);
    return -1;
  }

  std::string write(int at) const { return smiles::write_smiles(graph, at, rank); }
};

struct Prepared {
  Molecule product;
  std::vector<Molecule> reactants;  // sorted by key
};

Prepared prepare(const ReactionRecord &record) {
  Prepared p { Molecule(smiles::parse(record.product)), {} };
  const MolGraph r = smiles::parse(record.reactants);
  for (const auto &comp: smiles::connected_components(r))
    p.reactants.emplace_back(smiles::induced_subgraph(r, comp));
  std::stable_sort(p.reactants.begin(), p.reactants.end(),
                   [](const Molecule &a, const Molecule &b) { return a.key < b.key; });
  return p;
}

ReactionPair write_pair(const Prepared &p, int product_root) {
  ReactionPair out { p.product.write(product_root), {} };
  const auto map = p.product.graph.atoms[product_root].atom_map;
  for (std::size_t k = 0; k < p.reactants.size(); ++k) {
    const Molecule &m = p.reactants[k];
    int root = map ? m.find_map(*map) : -1;
    if (root < 0)
      root = m.root;
    out.reactants += (k ? "." : "") + m.write(root);
  }
  return out;
}

}  // namespace

ReactionRecord parse_reaction_line(std::string_view line, Split split) {
  line = trim(line);
  ReactionRecord rec;
  rec.split = split;
  if (const auto tab = line.find('\t'); tab != std::string_view::npos) {
    const std::string_view cls = trim(line.substr(0, tab));
    int value = 0;
    const auto [end, ec] = std::from_chars(cls.data(), cls.data() + cls.size(), value);
    if (ec != std::errc() || end != cls.data() + cls.size() || value < 0)
      throw Error(ErrorCode::kMalformedLine, "bad class field '" + std::string(cls) + "'");
    rec.reaction_class = value;
    line = trim(line.substr(tab + 1));
  }
  const auto first = line.find('>'), last = line.rfind('>');
  if (first == std::string_view::npos || first == last
      || line.find('>', first + 1) != last)
    throw Error(ErrorCode::kMalformedLine, "expected reactants>>product");
  rec.reactants = std::string(trim(line.substr(0, first)));
  rec.product = std::string(trim(line.substr(last + 1)));
  if (rec.reactants.empty() || rec.product.empty())
    throw Error(ErrorCode::kMalformedLine, "empty reaction side");
  // Both sides must parse with unique maps.
  align::prepare_side(rec.product);
  align::prepare_side(rec.reactants);
  return rec;
}

LoadResult load_reactions(const std::string &path, Split split) {
  std::ifstream f(path);
  if (!f)
    throw Error(ErrorCode::kFileNotFound, path);
  LoadResult out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    try {
      out.records.push_back(parse_reaction_line(line, split));
    } catch (const Error &e) {
      ++out.skipped;
      out.warnings.push_back(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.records.empty())
    throw Error(ErrorCode::kAllLinesInvalid,
                path + " (" + std::to_string(out.skipped) + " bad lines)");
  return out;
}

ReactionPair canonical_pair(const ReactionRecord &record) {
  const Prepared p = prepare(record);
  return write_pair(p, p.product.root);
}

std::vector<ReactionPair> augment(const ReactionRecord &record, int factor,
                                  std::mt19937_64 &rng) {
  const Prepared p = prepare(record);
  std::vector<ReactionPair> out { write_pair(p, p.product.root) };
  std::uniform_int_distribution<int> pick(0, static_cast<int>(p.product.graph.atoms.size()) - 1);
  for (int i = 0; i < factor; ++i)
    out.push_back(write_pair(p, pick(rng)));
  return out;
}

std::string class_token(int reaction_class) {
  return "<RC_" + std::to_string(reaction_class) + ">";
}

std::optional<int> strip_class_token(std::vector<std::string> &source) {
  if (source.empty() || !source.front().starts_with("<RC_") || !source.front().ends_with(">"))
    return std::nullopt;
  const std::string &t = source.front();
  int value = 0;
  const auto [end, ec] = std::from_chars(t.data() + 4, t.data() + t.size() - 1, value);
  if (ec != std::errc() || end != t.data() + t.size() - 1)
    return std::nullopt;
  source.erase(source.begin());
  return value;
}

EncodedPair encode_pair(const ReactionPair &pair, std::optional<int> reaction_class) {
  const align::MappedSide product = align::prepare_side(pair.product);
  const align::MappedSide reactants = align::prepare_side(pair.reactants);
  EncodedPair out { product.csmiles.texts(), reactants.csmiles.texts(),
                    align::build_sam(product, reactants) };
  if (reaction_class) {
    out.source.insert(out.source.begin(), class_token(*reaction_class));
    align::AlignmentMap shifted(out.sam.rows, out.sam.cols + 1);
    for (int i = 0; i < out.sam.rows; ++i)
      for (int j = 0; j < out.sam.cols; ++j)
        shifted.at(i, j + 1) = out.sam.at(i, j);
    out.sam = std::move(shifted);
  }
  return out;
}

codec::Vocabulary build_vocabulary(const std::vector<ReactionRecord> &train,
                                   bool class_conditioning) {
  std::vector<std::vector<std::string>> corpus;
  for (const ReactionRecord &r: train) {
    const std::optional<int> cls = class_conditioning ? r.reaction_class : std::nullopt;
    EncodedPair e = encode_pair(canonical_pair(r), cls);
    corpus.push_back(std::move(e.source));
    corpus.push_back(std::move(e.target));
  }
  // Re-rooting can open rings in a different order.
  std::vector<std::string> digits;
  for (int d = 1; d <= 9; ++d)
    digits.push_back(std::to_string(d));
  corpus.push_back(std::move(digits));
  return codec::build_vocab(corpus);
}

engine::Example to_example(const EncodedPair &pair, const codec::Vocabulary &vocab) {
  return { vocab.ids(pair.source), vocab.ids(pair.target), pair.sam };
}

}  // namespace csmiles::harness
