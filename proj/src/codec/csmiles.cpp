//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "csmiles/csmiles.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>
#include <sstream>

#include "csmiles/error.h"

namespace csmiles::codec {
namespace {

using smiles::AtomDescriptor;
using smiles::Chirality;

bool is_structural(std::string_view t) {
  if (t.size() == 1)
    return std::string_view("-=#:/\\().").find(t[0]) != std::string_view::npos
           || std::isdigit(static_cast<unsigned char>(t[0]));
  if (t.size() == 3 && t[0] == '%')
    return std::isdigit(static_cast<unsigned char>(t[1]))
           && std::isdigit(static_cast<unsigned char>(t[2]));
  if (t.size() >= 2 && t[0] == kIsotopePrefix)
    return std::all_of(t.begin() + 1, t.end(), [](char c) {
      return std::isdigit(static_cast<unsigned char>(c));
    });
  return false;
}

bool is_special_char(char c) {
  return kSpecialTokens.find(c) != std::string_view::npos;
}

bool is_isotope(std::string_view t) {
  return t.size() >= 2 && t[0] == kIsotopePrefix;
}

// Accumulates one atom's element and modifiers in the fixed emission order.
class AtomRun {
public:
  explicit AtomRun(std::string element, std::optional<int> isotope) {
    atom_.element = std::move(element);
    atom_.isotope = isotope;
  }

  // Stage ordering: & < @ < H < charge.
  void modify(char c) {
    switch (c) {
    case '&':
      require(stage_ < 1 && !atom_.aromatic, "repeated or late '&'");
      if (!smiles::is_aromatic_capable(atom_.element))
        throw Error(ErrorCode::kMalformedSequence,
                    atom_.element + " cannot be aromatic");
      atom_.aromatic = true;
      stage_ = 0;
      break;
    case '@':
      require(stage_ <= 1 && chiral_ < 2, "too many or late '@'");
      ++chiral_;
      stage_ = 1;
      break;
    case 'H':
      require(stage_ <= 2, "'H' after charge");
      ++atom_.explicit_h;
      stage_ = 2;
      break;
    case '+':
      require(stage_ <= 3 && atom_.charge >= 0, "'+' after '$'");
      ++atom_.charge;
      stage_ = 3;
      break;
    case '$':
      require(stage_ <= 3 && atom_.charge <= 0, "'$' after '+'");
      --atom_.charge;
      stage_ = 3;
      break;
    }
  }

  std::string text() {
    atom_.chirality = chiral_ == 0   ? Chirality::kNone
                      : chiral_ == 1 ? Chirality::kAnticlockwise
                                     : Chirality::kClockwise;
    const bool bracket = atom_.explicit_h > 0 || atom_.charge != 0
                         || atom_.chirality != Chirality::kNone
                         || atom_.isotope
                         || !smiles::is_organic_subset(atom_.element);
    if (bracket)
      return smiles::atom_text(atom_, atom_.explicit_h, -1);
    return smiles::atom_text(atom_, 0, 0);
  }

private:
  static void require(bool ok, const char *what) {
    if (!ok)
      throw Error(ErrorCode::kMalformedSequence, what);
  }

  AtomDescriptor atom_;
  int chiral_ = 0;
  int stage_ = -1;
};

// Assigns token kinds; an H is an element unless it follows an atom run.
std::vector<CToken> classify_in_context(std::span<const std::string> tokens) {
  std::vector<CToken> out;
  out.reserve(tokens.size());
  bool in_atom = false;
  for (const std::string &t: tokens) {
    CTokenKind kind = classify(t);
    if (t == "H" && !in_atom)
      kind = CTokenKind::kElement;
    out.push_back({ kind, t });
    in_atom = kind == CTokenKind::kElement
              || (kind == CTokenKind::kSpecial && in_atom);
  }
  return out;
}

}  // namespace

std::vector<std::string> CSmilesSequence::texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const CToken &t: tokens)
    out.push_back(t.text);
  return out;
}

CTokenKind classify(std::string_view text) {
  if (text.size() == 1 && is_special_char(text[0]))
    return CTokenKind::kSpecial;
  if (Vocabulary::is_sentinel(text))
    return CTokenKind::kSentinel;
  if (is_structural(text))
    return CTokenKind::kStructural;
  return CTokenKind::kElement;
}

std::vector<CToken> encode_atom(const AtomDescriptor &atom) {
  std::vector<CToken> out;
  if (atom.isotope)
    out.push_back({ CTokenKind::kStructural,
                    kIsotopePrefix + std::to_string(*atom.isotope) });
  out.push_back({ CTokenKind::kElement, atom.element });
  auto special = [&](const char *s, int times) {
    for (int k = 0; k < times; ++k)
      out.push_back({ CTokenKind::kSpecial, s });
  };
  special("&", atom.aromatic ? 1 : 0);
  special("@", atom.chirality == Chirality::kAnticlockwise ? 1
               : atom.chirality == Chirality::kClockwise   ? 2
                                                           : 0);
  special("H", atom.explicit_h);
  special(atom.charge > 0 ? "+" : "$", std::abs(atom.charge));
  return out;
}

CSmilesSequence encode(const smiles::TokenSequence &tokens) {
  CSmilesSequence seq;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const smiles::Token &t = tokens[k];
    const int src = static_cast<int>(k);
    if (!t.is_atom()) {
      seq.tokens.push_back({ CTokenKind::kStructural, t.text });
      seq.source_span.push_back(src);
      continue;
    }
    // A hydrogen atom right after another atom would read as its H count.
    if (t.atom->element == "H" && !t.atom->isotope && k > 0
        && tokens[k - 1].is_atom()) {
      seq.tokens.push_back({ CTokenKind::kStructural, "-" });
      seq.source_span.push_back(src);
    }
    for (CToken &c: encode_atom(*t.atom)) {
      seq.tokens.push_back(std::move(c));
      seq.source_span.push_back(src);
    }
  }
  return seq;
}

CSmilesSequence encode(std::string_view smiles) {
  return encode(smiles::tokenize(smiles));
}

std::string decode(std::span<const std::string> tokens) {
  std::string out;
  std::optional<AtomRun> run;
  std::optional<int> isotope;
  auto flush = [&] {
    if (run) {
      out += run->text();
      run.reset();
    }
  };

  for (const CToken &t: classify_in_context(tokens)) {
    switch (t.kind) {
    case CTokenKind::kSentinel:
      throw Error(ErrorCode::kMalformedSequence,
                  "sentinel token " + t.text + " inside sequence");
    case CTokenKind::kSpecial:
      if (!run)
        throw Error(ErrorCode::kDanglingModifier,
                    "'" + t.text + "' has no preceding element");
      run->modify(t.text[0]);
      break;
    case CTokenKind::kElement:
      flush();
      if (!smiles::is_element_symbol(t.text))
        throw Error(ErrorCode::kMalformedSequence,
                    "unknown element token " + t.text);
      run.emplace(t.text, isotope);
      isotope.reset();
      break;
    case CTokenKind::kStructural:
      flush();
      if (isotope)
        throw Error(ErrorCode::kMalformedSequence,
                    "isotope label not followed by an element");
      if (is_isotope(t.text))
        isotope = std::atoi(t.text.c_str() + 1);
      else
        out += t.text;
      break;
    }
  }
  flush();
  if (isotope)
    throw Error(ErrorCode::kMalformedSequence,
                "isotope label not followed by an element");
  if (out.empty())
    throw Error(ErrorCode::kMalformedSequence, "empty sequence");
  return out;
}

std::string decode(const CSmilesSequence &seq) {
  const std::vector<std::string> texts = seq.texts();
  return decode(texts);
}

std::string to_text(const CSmilesSequence &seq) {
  std::string out;
  for (std::size_t k = 0; k < seq.tokens.size(); ++k) {
    if (k > 0)
      out += ' ';
    out += seq.tokens[k].text;
  }
  return out;
}

CSmilesSequence from_text(std::string_view text) {
  std::istringstream in { std::string(text) };
  std::vector<std::string> words;
  for (std::string w; in >> w;)
    words.push_back(std::move(w));
  CSmilesSequence seq;
  seq.tokens = classify_in_context(words);
  seq.source_span.assign(seq.tokens.size(), -1);
  return seq;
}

std::vector<std::string> raw_tokens(std::string_view smiles) {
  std::vector<std::string> out;
  for (const smiles::Token &t: smiles::tokenize(smiles))
    out.push_back(t.text);
  return out;
}

Vocabulary::Vocabulary() {
  for (const char *s: { "<pad>", "<unk>", "<sos>", "<eos>" })
    add(s, 0);
}

int Vocabulary::add(const std::string &token, std::int64_t count) {
  auto it = index_.find(token);
  if (it != index_.end()) {
    counts_[it->second] += count;
    return it->second;
  }
  const int id = size();
  tokens_.push_back(token);
  counts_.push_back(count);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

const std::string &Vocabulary::token(int id) const {
  if (id < 0 || id >= size())
    throw Error(ErrorCode::kUnknownId, "token id " + std::to_string(id));
  return tokens_[id];
}

std::int64_t Vocabulary::count(int id) const {
  if (id < 0 || id >= size())
    throw Error(ErrorCode::kUnknownId, "token id " + std::to_string(id));
  return counts_[id];
}

std::vector<int> Vocabulary::ids(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const std::string &t: tokens)
    out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::texts(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i: ids)
    out.push_back(token(i));
  return out;
}

bool Vocabulary::is_sentinel(std::string_view token) {
  return token.size() > 2 && token.front() == '<' && token.back() == '>';
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus) {
  if (corpus.empty())
    throw Error(ErrorCode::kEmptyCorpus, "no sequences");
  std::map<std::string, std::int64_t> counts;
  for (const auto &seq: corpus)
    for (const std::string &t: seq)
      ++counts[t];
  Vocabulary vocab;
  for (const auto &[t, c]: counts)
    vocab.add(t, c);
  return vocab;
}

Vocabulary vocab_from_tokens(std::span<const std::string> tokens) {
  Vocabulary vocab;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k < static_cast<std::size_t>(Vocabulary::kNumSentinels)) {
      if (tokens[k] != vocab.token(static_cast<int>(k)))
        throw Error(ErrorCode::kCheckpoint, "sentinel mismatch at id "
                                                + std::to_string(k));
      continue;
    }
    if (vocab.add(tokens[k], 0) != static_cast<int>(k))
      throw Error(ErrorCode::kCheckpoint, "duplicate token " + tokens[k]);
  }
  return vocab;
}

}  // namespace csmiles::codec
