//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>

#include "csmiles/error.h"
#include "csmiles/smiles.h"

namespace csmiles::smiles {
namespace {

constexpr std::array<std::string_view, 118> kElements = {
  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
  "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr",
  "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
  "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
  "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
  "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf",
  "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po",
  "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm",
  "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
  "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
};

constexpr std::array<std::string_view, 10> kOrganic = {
  "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I",
};

constexpr std::array<std::string_view, 8> kAromatic = {
  "B", "C", "N", "O", "P", "S", "Se", "As",
};

std::string capitalize(std::string_view lower) {
  std::string out(lower);
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

[[noreturn]] void invalid_atom(std::string_view text, std::string_view why) {
  throw Error(ErrorCode::kInvalidAtom,
              "bracket atom " + std::string(text) + ": " + std::string(why));
}

int read_int(std::string_view s, std::size_t &i) {
  int value = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) != 0) {
    value = value * 10 + (s[i] - '0');
    ++i;
  }
  return value;
}

bool starts_with_digit(std::string_view s, std::size_t i) {
  return i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) != 0;
}

// Parses the text between '[' and ']'.
AtomDescriptor parse_bracket(std::string_view text) {
  std::string_view s = text.substr(1, text.size() - 2);
  AtomDescriptor atom;
  atom.bracket = true;
  std::size_t i = 0;

  if (starts_with_digit(s, i)) {
    int iso = read_int(s, i);
    if (iso <= 0)
      invalid_atom(text, "isotope must be positive");
    atom.isotope = iso;
  }

  if (i >= s.size())
    invalid_atom(text, "missing element symbol");

  if (std::islower(static_cast<unsigned char>(s[i])) != 0) {
    // Aromatic symbol; two-letter forms first.
    std::string_view two = s.substr(i, 2);
    if (two == "se" || two == "as") {
      atom.element = capitalize(two);
      i += 2;
    } else {
      std::string_view one = s.substr(i, 1);
      atom.element = capitalize(one);
      if (!is_aromatic_capable(atom.element) || atom.element.size() != 1)
        invalid_atom(text, "unsupported aromatic symbol");
      ++i;
    }
    atom.aromatic = true;
  } else if (std::isupper(static_cast<unsigned char>(s[i])) != 0) {
    if (i + 1 < s.size()
        && std::islower(static_cast<unsigned char>(s[i + 1])) != 0
        && is_element_symbol(s.substr(i, 2))) {
      atom.element = std::string(s.substr(i, 2));
      i += 2;
    } else if (is_element_symbol(s.substr(i, 1))) {
      atom.element = std::string(s.substr(i, 1));
      ++i;
    } else {
      invalid_atom(text, "unknown element");
    }
  } else {
    invalid_atom(text, "missing element symbol");
  }

  if (i < s.size() && s[i] == '@') {
    ++i;
    atom.chirality = Chirality::kAnticlockwise;
    if (i < s.size() && s[i] == '@') {
      ++i;
      atom.chirality = Chirality::kClockwise;
    }
    if (i < s.size() && std::isupper(static_cast<unsigned char>(s[i])) != 0
        && s[i] != 'H')
      invalid_atom(text, "extended chirality classes are not supported");
  }

  if (i < s.size() && s[i] == 'H') {
    ++i;
    atom.explicit_h = starts_with_digit(s, i) ? read_int(s, i) : 1;
  }

  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    const char sign = s[i];
    ++i;
    int magnitude = 1;
    if (starts_with_digit(s, i)) {
      magnitude = read_int(s, i);
    } else {
      while (i < s.size() && s[i] == sign) {
        ++magnitude;
        ++i;
      }
    }
    atom.charge = sign == '+' ? magnitude : -magnitude;
  }

  if (i < s.size() && s[i] == ':') {
    ++i;
    if (!starts_with_digit(s, i))
      invalid_atom(text, "atom map must be a number");
    int map = read_int(s, i);
    if (map > 0)
      atom.atom_map = map;
  }

  if (i != s.size())
    invalid_atom(text, "unexpected trailing characters");
  return atom;
}

}  // namespace

bool is_element_symbol(std::string_view symbol) {
  return std::find(kElements.begin(), kElements.end(), symbol)
         != kElements.end();
}

bool is_organic_subset(std::string_view element) {
  return std::find(kOrganic.begin(), kOrganic.end(), element) != kOrganic.end();
}

bool is_aromatic_capable(std::string_view element) {
  return std::find(kAromatic.begin(), kAromatic.end(), element)
         != kAromatic.end();
}

int Token::ring_number() const {
  if (text.front() == '%')
    return std::stoi(text.substr(1));
  return text.front() - '0';
}

TokenSequence tokenize(std::string_view smiles) {
  if (smiles.empty())
    throw Error(ErrorCode::kEmptyInput, "empty SMILES");

  TokenSequence tokens;
  auto push = [&](TokenKind kind, std::size_t begin, std::size_t len) {
    Token tok { kind, std::string(smiles.substr(begin, len)), std::nullopt,
                tokens.size() };
    tokens.push_back(std::move(tok));
  };

  std::size_t i = 0;
  while (i < smiles.size()) {
    const char c = smiles[i];
    switch (c) {
    case '[': {
      std::size_t end = smiles.find(']', i);
      if (end == std::string_view::npos)
        throw Error(ErrorCode::kUnterminatedBracket,
                    "no closing ] for bracket at " + std::to_string(i));
      push(TokenKind::kAtom, i, end - i + 1);
      tokens.back().atom = parse_bracket(tokens.back().text);
      i = end + 1;
      break;
    }
    case 'B':
    case 'C': {
      std::size_t len = 1;
      if (i + 1 < smiles.size()
          && ((c == 'B' && smiles[i + 1] == 'r')
              || (c == 'C' && smiles[i + 1] == 'l')))
        len = 2;
      push(TokenKind::kAtom, i, len);
      tokens.back().atom = AtomDescriptor { .element = tokens.back().text };
      i += len;
      break;
    }
    case 'N':
    case 'O':
    case 'P':
    case 'S':
    case 'F':
    case 'I':
      push(TokenKind::kAtom, i, 1);
      tokens.back().atom = AtomDescriptor { .element = std::string(1, c) };
      ++i;
      break;
    case 'b':
    case 'c':
    case 'n':
    case 'o':
    case 'p':
    case 's':
      push(TokenKind::kAtom, i, 1);
      tokens.back().atom = AtomDescriptor {
        .element = capitalize(smiles.substr(i, 1)),
        .aromatic = true,
      };
      ++i;
      break;
    case '-':
    case '=':
    case '#':
    case ':':
    case '/':
    case '\\':
      push(TokenKind::kBond, i, 1);
      ++i;
      break;
    case '(':
      push(TokenKind::kBranchOpen, i, 1);
      ++i;
      break;
    case ')':
      push(TokenKind::kBranchClose, i, 1);
      ++i;
      break;
    case '.':
      push(TokenKind::kDot, i, 1);
      ++i;
      break;
    case '%':
      if (i + 2 < smiles.size() && starts_with_digit(smiles, i + 1)
          && starts_with_digit(smiles, i + 2)) {
        push(TokenKind::kRingClosure, i, 3);
        i += 3;
        break;
      }
      throw Error(ErrorCode::kIllegalCharacter,
                  "'%' must be followed by two digits at "
                      + std::to_string(i));
    default:
      if (std::isdigit(static_cast<unsigned char>(c)) != 0) {
        push(TokenKind::kRingClosure, i, 1);
        ++i;
        break;
      }
      throw Error(ErrorCode::kIllegalCharacter,
                  "byte " + std::to_string(static_cast<unsigned char>(c))
                      + " at " + std::to_string(i));
    }
  }
  return tokens;
}

}  // namespace csmiles::smiles
