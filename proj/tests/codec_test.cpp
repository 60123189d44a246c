//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "csmiles/csmiles.h"
#include "csmiles/error.h"
#include "support/random_mol.h"

namespace csmiles::codec {
namespace {

using Texts = std::vector<std::string>;

Texts atom_texts(std::string_view bracket) {
  Texts out;
  for (const CToken &t: encode_atom(*smiles::tokenize(bracket)[0].atom))
    out.push_back(t.text);
  return out;
}

ErrorCode decode_error(const Texts &tokens) {
  try {
    decode(tokens);
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIo;
}

bool round_trips(const std::string &s) {
  const std::string back = decode(encode(s));
  return smiles::canonicalize(smiles::parse(back))
         == smiles::canonicalize(smiles::parse(s));
}

TEST(EncodeAtomTest, SpecialTokenTable) {
  EXPECT_EQ(atom_texts("[S+]"), (Texts { "S", "+" }));
  EXPECT_EQ(atom_texts("[N-]"), (Texts { "N", "$" }));
  EXPECT_EQ(atom_texts("[SH]"), (Texts { "S", "H" }));
  EXPECT_EQ(atom_texts("[S@]"), (Texts { "S", "@" }));
  EXPECT_EQ(atom_texts("c"), (Texts { "C", "&" }));
  EXPECT_EQ(atom_texts("[s+]"), (Texts { "S", "&", "+" }));
  EXPECT_EQ(atom_texts("[OH]"), (Texts { "O", "H" }));
  EXPECT_EQ(atom_texts("[C@@H]"), (Texts { "C", "@", "@", "H" }));
  EXPECT_EQ(atom_texts("C"), (Texts { "C" }));
}

TEST(EncodeAtomTest, FixedOrderAndIsotope) {
  EXPECT_EQ(atom_texts("[13c@@H2+2:5]"),
            (Texts { "^13", "C", "&", "@", "@", "H", "H", "+", "+" }));
  EXPECT_EQ(atom_texts("[O-2]"), (Texts { "O", "$", "$" }));
  EXPECT_EQ(atom_texts("[Cl-]"), (Texts { "Cl", "$" }));
}

TEST(EncodeAtomTest, Multiplicity) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> h(0, 4), q(-3, 3), chi(0, 2);
  for (int trial = 0; trial < 2000; ++trial) {
    smiles::AtomDescriptor a;
    a.element = trial % 2 ? "N" : "Fe";
    a.explicit_h = h(rng);
    a.charge = q(rng);
    a.chirality = static_cast<smiles::Chirality>(chi(rng));
    a.bracket = true;
    Texts t;
    for (const CToken &c: encode_atom(a))
      t.push_back(c.text);
    auto count = [&](const char *s) { return std::count(t.begin(), t.end(), s); };
    EXPECT_EQ(count("H"), a.explicit_h);
    EXPECT_EQ(count("+"), std::max(a.charge, 0));
    EXPECT_EQ(count("$"), std::max(-a.charge, 0));
    EXPECT_EQ(count("@"), static_cast<int>(a.chirality));
    EXPECT_EQ(t.front(), a.element);
  }
}

TEST(EncodeTest, Benzene) {
  CSmilesSequence seq = encode("c1ccccc1");
  EXPECT_EQ(to_text(seq), "C & 1 C & C & C & C & C & 1");
  EXPECT_EQ(seq.source_span,
            (std::vector<int> { 0, 0, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7 }));
}

TEST(EncodeTest, PlainAndMapped) {
  EXPECT_EQ(to_text(encode("CCO")), "C C O");
  EXPECT_EQ(to_text(encode("[NH2:3]C")), "N H H C");
}

TEST(EncodeTest, HydrogenAtoms) {
  EXPECT_EQ(to_text(encode("[H]C")), "H C");
  EXPECT_EQ(to_text(encode("C[H]")), "C - H");
  EXPECT_EQ(to_text(encode("[2H]C([2H])[2H]")), "^2 H C ( ^2 H ) ^2 H");
  EXPECT_EQ(decode(encode("C[H]")), "C-[H]");
  EXPECT_EQ(decode(encode("[H][H]")), "[H]-[H]");
  EXPECT_TRUE(round_trips("[2H]C([2H])[2H]"));
}

TEST(DecodeTest, Brackets) {
  EXPECT_EQ(decode(Texts { "S", "&", "+" }), "[s+]");
  EXPECT_EQ(decode(Texts { "O", "H" }), "[OH]");
  EXPECT_EQ(decode(Texts { "C", "&", "1", "C", "&", "C", "&", "C", "&", "C",
                           "&", "C", "&", "1" }),
            "c1ccccc1");
  EXPECT_EQ(decode(Texts { "Na", "+" }), "[Na+]");
  EXPECT_EQ(decode(Texts { "Si" }), "[Si]");
  EXPECT_EQ(decode(Texts { "Se", "&" }), "[se]");
  EXPECT_EQ(decode(Texts { "C", "@", "@", "H" }), "[C@@H]");
}

TEST(DecodeTest, Errors) {
  EXPECT_EQ(decode_error({ "+" }), ErrorCode::kDanglingModifier);
  EXPECT_EQ(decode_error({ "C", "(", "&" }), ErrorCode::kDanglingModifier);
  EXPECT_EQ(decode_error({ "C", "+", "H" }), ErrorCode::kMalformedSequence);
  EXPECT_EQ(decode_error({ "C", "+", "$" }), ErrorCode::kMalformedSequence);
  EXPECT_EQ(decode_error({ "C", "@", "@", "@" }), ErrorCode::kMalformedSequence);
  EXPECT_EQ(decode_error({ "F", "&" }), ErrorCode::kMalformedSequence);
  EXPECT_EQ(decode_error({ "Xq" }), ErrorCode::kMalformedSequence);
  EXPECT_EQ(decode_error({ "C", "^13" }), ErrorCode::kMalformedSequence);
  EXPECT_EQ(decode_error({ "C", "<eos>" }), ErrorCode::kMalformedSequence);
}

TEST(TextTest, RoundTrip) {
  CSmilesSequence seq = encode("[NH3+]CC(=O)[O-].[H]");
  CSmilesSequence back = from_text(to_text(seq));
  EXPECT_EQ(back.tokens, seq.tokens);
}

TEST(ClosureTest, RandomGraphs) {
  std::mt19937_64 rng(17);
  std::set<std::string> specials = { "&", "+", "$", "H", "@" };
  for (int trial = 0; trial < 500; ++trial) {
    smiles::MolGraph g = testing::random_graph(rng);
    CSmilesSequence seq = encode(smiles::write_smiles(g, 0));
    for (const CToken &t: seq.tokens) {
      EXPECT_EQ(t.text.find('['), std::string::npos);
      EXPECT_EQ(t.text.find(']'), std::string::npos);
      switch (t.kind) {
      case CTokenKind::kSpecial:
        EXPECT_TRUE(specials.count(t.text));
        break;
      case CTokenKind::kElement:
        EXPECT_TRUE(smiles::is_element_symbol(t.text)) << t.text;
        EXPECT_TRUE(std::isupper(static_cast<unsigned char>(t.text[0])));
        break;
      default:
        break;
      }
    }
  }
}

TEST(RoundTripTest, RandomGraphsFromEveryRoot) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 400; ++trial) {
    smiles::MolGraph g = testing::random_graph(rng);
    for (int root = 0; root < static_cast<int>(g.atoms.size()); ++root) {
      const std::string s = smiles::write_smiles(g, root);
      ASSERT_TRUE(round_trips(s)) << s << " -> " << decode(encode(s));
    }
  }
}

TEST(RoundTripTest, SmallGraphsAgainstBruteForce) {
  std::mt19937_64 rng(29);
  testing::RandomMolOptions opt;
  opt.max_atoms = 7;
  for (int trial = 0; trial < 300; ++trial) {
    smiles::MolGraph g = testing::random_graph(rng, opt);
    const std::string s = smiles::write_smiles(g, 0);
    smiles::MolGraph back = smiles::parse(decode(encode(s)));
    ASSERT_TRUE(testing::isomorphic_brute_force(smiles::parse(s), back)) << s;
  }
}

TEST(RoundTripTest, CuratedMolecules) {
  auto lines = testing::read_lines(CSMILES_DATA_DIR "/molecules_curated.txt");
  ASSERT_GE(lines.size(), 200);
  for (const std::string &s: lines)
    EXPECT_TRUE(round_trips(s)) << s;
}

TEST(VocabTest, Sentinels) {
  std::vector<Texts> corpus = { encode("CCO").texts() };
  Vocabulary v = build_vocab(corpus);
  EXPECT_EQ(v.tokens(), (Texts { "<pad>", "<unk>", "<sos>", "<eos>", "C", "O" }));
  EXPECT_EQ(v.id("C"), 4);
  EXPECT_EQ(v.count(4), 2);
  EXPECT_EQ(v.id("N"), Vocabulary::kUnk);
  EXPECT_THROW(build_vocab(std::vector<Texts> {}), Error);
}

TEST(VocabTest, CompositesCollapse) {
  const Texts corpus = { "[s+]", "[S+]", "S", "[SH+]", "[s-]", "[SH2]" };
  std::vector<Texts> raw, csm;
  for (const auto &s: corpus) {
    raw.push_back(raw_tokens(s));
    csm.push_back(encode(s).texts());
  }
  EXPECT_GT(build_vocab(raw).size(), build_vocab(csm).size());
}

TEST(VocabTest, RestoreFromTokens) {
  std::vector<Texts> corpus = { encode("c1ccncc1[NH3+]").texts() };
  Vocabulary v = build_vocab(corpus);
  Vocabulary back = vocab_from_tokens(v.tokens());
  EXPECT_EQ(back.tokens(), v.tokens());
}

// Distinct C-SMILES tokens never exceed distinct raw tokens plus the five
// special tokens. The strict reduction needs every composite's element to
// also occur bare; otherwise a corpus of six exotic ions is a counterexample.
TEST(VocabTest, MonotonicityOnRandomCorpora) {
  std::mt19937_64 rng(31);
  int strict_cases = 0;
  for (int trial = 0; trial < 200; ++trial) {
    testing::RandomMolOptions opt;
    opt.allow_isotopes = trial % 2 == 0;
    opt.allow_foreign_elements = trial % 4 == 0;
    std::vector<Texts> raw, csm;
    std::set<std::string> composites, composite_elements, bare_elements;
    bool isotopes = false;
    for (int k = 0; k < 20; ++k) {
      std::string s = smiles::write_smiles(testing::random_graph(rng, opt), 0);
      raw.push_back(raw_tokens(s));
      csm.push_back(encode(s).texts());
      for (const smiles::Token &t: smiles::tokenize(s)) {
        if (!t.is_atom())
          continue;
        if (t.text.front() == '[') {
          composites.insert(t.text);
          composite_elements.insert(t.atom->element);
          isotopes |= t.atom->isotope.has_value();
        } else {
          bare_elements.insert(t.atom->element);
        }
      }
    }
    const int nr = build_vocab(raw).size(), nc = build_vocab(csm).size();
    EXPECT_LE(nc, nr + 5);
    const bool covered = std::includes(bare_elements.begin(), bare_elements.end(),
                                       composite_elements.begin(),
                                       composite_elements.end());
    if (composites.size() >= 6 && covered && !isotopes) {
      EXPECT_LT(nc, nr);
      ++strict_cases;
    }
  }
  EXPECT_GT(strict_cases, 10);
}

TEST(VocabTest, ExoticIonsDoNotShrink) {
  const Texts corpus = { "[Na+]", "[K+]", "[Mg+2]", "[Zn+2]", "[Li+]", "[Cs+]" };
  std::vector<Texts> raw, csm;
  for (const auto &s: corpus) {
    raw.push_back(raw_tokens(s));
    csm.push_back(encode(s).texts());
  }
  EXPECT_GE(build_vocab(csm).size(), build_vocab(raw).size());
}

}  // namespace
}  // namespace csmiles::codec
