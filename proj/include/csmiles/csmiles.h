//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CSMILES_CSMILES_H_
#define CSMILES_CSMILES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "csmiles/smiles.h"

namespace csmiles::codec {

enum class CTokenKind {
  kElement,
  kSpecial,
  kStructural,
  kSentinel,
};

struct CToken {
  CTokenKind kind;
  std::string text;

  bool operator==(const CToken &) const = default;
};

struct CSmilesSequence {
  std::vector<CToken> tokens;
  // Index of the originating SMILES token for each entry of `tokens`.
  std::vector<int> source_span;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> texts() const;
};

inline constexpr std::string_view kSpecialTokens = "&+$H@";

// Isotope labels are emitted as a single structural token, e.g. "^13".
inline constexpr char kIsotopePrefix = '^';

CTokenKind classify(std::string_view text);

std::vector<CToken> encode_atom(const smiles::AtomDescriptor &atom);

CSmilesSequence encode(const smiles::TokenSequence &tokens);
CSmilesSequence encode(std::string_view smiles);

std::string decode(std::span<const std::string> tokens);
std::string decode(const CSmilesSequence &seq);

// Space separated token text and its inverse.
std::string to_text(const CSmilesSequence &seq);
CSmilesSequence from_text(std::string_view text);

// Token texts of the raw SMILES tokenization.
std::vector<std::string> raw_tokens(std::string_view smiles);

class Vocabulary {
public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumSentinels = 4;

  Vocabulary();

  int add(const std::string &token, std::int64_t count = 1);
  int id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string &token(int id) const;
  std::int64_t count(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string> &tokens() const { return tokens_; }

  std::vector<int> ids(std::span<const std::string> tokens) const;
  std::vector<std::string> texts(std::span<const int> ids) const;

  static bool is_sentinel(std::string_view token);

private:
  std::vector<std::string> tokens_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> index_;
};

// Sentinels first, then the remaining tokens in sorted order.
Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus);

// Restores a vocabulary from its token list (ids = positions).
Vocabulary vocab_from_tokens(std::span<const std::string> tokens);

}  // namespace csmiles::codec

#endif  // CSMILES_CSMILES_H_
