#!/usr/bin/env python3
#
# Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
# SPDX-License-Identifier: Apache-2.0
#
"""Builds the bundled atom-mapped reaction and molecule corpora.

Development-time only; needs RDKit. Output is checked into data/.
"""

import argparse
import random

from rdkit import Chem, RDLogger
from rdkit.Chem import AllChem

RDLogger.DisableLog("rdApp.*")

AMINES = [
    "CN", "CCN", "CCCN", "CC(C)N", "NCc1ccccc1", "C1CCNCC1", "C1COCCN1",
    "CNC", "Nc1ccccc1", "Nc1ccc(F)cc1", "Nc1ccc(Cl)cc1", "C[C@H](N)c1ccccc1",
    "C[C@@H](N)c1ccccc1", "NC1CC1", "CN1CCNCC1", "NCc1ccco1", "NCCO",
    "Nc1ccncc1", "NCc1ccc(OC)cc1", "C1CCNC1", "N[C@@H](C)C(=O)OC",
    "N[C@@H](Cc1ccccc1)C(=O)OC", "Nc1cccc(C(F)(F)F)c1", "Nc1ccc2[nH]ccc2c1",
    "NCC(F)(F)F", "CC(C)(C)N", "Nc1nccs1", "OC1CCNCC1", "NCCc1c[nH]c2ccccc12",
]
ACIDS = [
    "CC(=O)O", "OC(=O)c1ccccc1", "OC(=O)c1ccc(F)cc1", "OC(=O)C1CC1",
    "OC(=O)c1ccncc1", "OC(=O)c1ccco1", "OC(=O)Cc1ccccc1", "OC(=O)c1cccs1",
    "COc1ccc(C(=O)O)cc1", "OC(=O)c1ccc([N+](=O)[O-])cc1", "CC(C)C(=O)O",
    "OC(=O)[C@@H]1CCCN1C(=O)OC(C)(C)C", "OC(=O)c1cc(Cl)ccc1Cl",
]
ACYL_CHLORIDES = [
    "CC(=O)Cl", "O=C(Cl)c1ccccc1", "O=C(Cl)c1ccc(Cl)cc1", "O=C(Cl)C1CCCCC1",
    "CCC(=O)Cl", "O=C(Cl)c1cccnc1", "COC(=O)Cl", "O=C(Cl)OCc1ccccc1",
]
SULFONYL_CHLORIDES = [
    "CS(=O)(=O)Cl", "Cc1ccc(S(=O)(=O)Cl)cc1", "O=S(=O)(Cl)c1ccccc1",
    "O=S(=O)(Cl)c1cccs1",
]
ALKYL_HALIDES = [
    "CI", "CCBr", "BrCc1ccccc1", "ClCc1ccccc1", "BrCC(=O)OCC", "CCCBr",
    "BrCc1ccc(F)cc1", "BrCCO", "ICC(F)(F)F", "BrCc1ccccn1", "C=CCBr",
    "BrCC1CC1", "ClCc1ccc(Cl)cc1",
]
ARYL_HALIDES = [
    "Brc1ccccc1", "Brc1ccc(F)cc1", "Brc1cccnc1", "COc1ccc(Br)cc1",
    "Brc1ccc(C#N)cc1", "Cc1ccc(Br)cc1", "Brc1ccc2ccccc2c1", "Brc1cccs1",
    "O=Cc1ccc(Br)cc1", "Brc1ccc(C(=O)OC)cc1", "Ic1ccccc1", "Brc1cnc(N)nc1",
]
SNAR_HALIDES = [
    "Fc1ccc([N+](=O)[O-])cc1", "Clc1ncccn1", "Clc1ccc([N+](=O)[O-])cn1",
    "Clc1nc(Cl)ncc1", "Fc1ccccc1C#N", "Clc1ccnc2ccccc12", "Clc1ncnc2[nH]ccc12",
]
BORONIC = [
    "OB(O)c1ccccc1", "OB(O)c1ccc(F)cc1", "COc1ccc(B(O)O)cc1", "OB(O)c1cccnc1",
    "OB(O)c1ccco1", "Cc1ccc(B(O)O)cc1", "OB(O)c1ccc(C(F)(F)F)cc1",
]
PHENOLS = [
    "Oc1ccccc1", "Oc1ccc(F)cc1", "COc1ccc(O)cc1", "Oc1ccc(C=O)cc1",
    "Oc1cccnc1", "CC(=O)c1ccc(O)cc1", "Oc1ccc2ccccc2c1", "OCc1ccccc1",
    "CC(C)O", "OC[C@@H]1CCCO1",
]
ALCOHOLS = [
    "OCc1ccccc1", "CCO", "OCC1CCCCC1", "C[C@@H](O)c1ccccc1", "OCCc1ccccc1",
    "OC1CCCC1", "OCc1ccc(Cl)cc1", "OC[C@H]1CCCN1C(=O)OC(C)(C)C",
    "OCc1ccncc1", "CC(C)(C)OC(=O)N1CCC(O)CC1",
]
NITRO = [
    "O=[N+]([O-])c1ccccc1", "Cc1ccc([N+](=O)[O-])cc1",
    "COC(=O)c1ccc([N+](=O)[O-])cc1", "O=[N+]([O-])c1cccnc1",
    "O=[N+]([O-])c1ccc(F)cc1N", "Clc1ccc([N+](=O)[O-])cc1",
]
ESTERS = [
    "COC(=O)c1ccccc1", "CCOC(=O)Cc1ccccc1", "COC(=O)c1ccc(Cl)cc1",
    "COC(=O)C1CCN(Cc2ccccc2)CC1", "CCOC(=O)c1ccncc1", "COC(=O)[C@@H](C)Oc1ccccc1",
    "COC(=O)c1ccc(N)cc1", "CC(C)(C)OC(=O)CN1CCCC1",
]
KETONES = [
    "CC(=O)c1ccccc1", "O=C1CCCCC1", "CC(=O)c1ccc(F)cc1", "O=Cc1ccccc1",
    "O=C1CCN(Cc2ccccc2)CC1", "O=Cc1ccncc1", "CCC(=O)CC",
]
BOC_AMINES = [
    "CC(C)(C)OC(=O)NCc1ccccc1", "CC(C)(C)OC(=O)N1CCNCC1",
    "CC(C)(C)OC(=O)N1CCC(N)CC1", "CC(C)(C)OC(=O)N[C@@H](C)C(=O)O",
    "CC(C)(C)OC(=O)N1CCC(Oc2ccccc2)CC1", "CC(C)(C)OC(=O)NCCO",
    "CC(C)(C)OC(=O)N1CCC[C@H]1C(=O)O", "CC(C)(C)OC(=O)Nc1ccc(F)cc1",
]
BENZYL_ETHERS = [
    "c1ccc(COc2ccccc2)cc1", "OCCOCc1ccccc1", "COc1ccc(OCc2ccccc2)cc1",
]
BOC2O = "CC(C)(C)OC(=O)OC(=O)OC(C)(C)C"

TEMPLATES = {
    # class: [(name, smarts, reactant pools)]
    1: [
        ("n-alkylation", "[N;!H0;!$(NC=O);!$(N-a);!$(N-S);!$(N=*);+0:1].[CH2,CH3:2][Cl,Br,I]>>[N:1][C:2]",
         [AMINES, ALKYL_HALIDES]),
        ("o-alkylation", "[OH1;$(Oc),$(OC):1].[CH2,CH3:2][Cl,Br,I]>>[O:1][C:2]",
         [PHENOLS, ALKYL_HALIDES]),
        ("snar", "[N;!H0;!$(NC=O);+0:1].[c:2][F,Cl]>>[N:1][c:2]",
         [AMINES, SNAR_HALIDES]),
    ],
    2: [
        ("amide-acyl-chloride", "[N;!H0;!$(NC=O);!$(N-S);+0:1].[C:2](=[O:3])Cl>>[N:1][C:2]=[O:3]",
         [AMINES, ACYL_CHLORIDES]),
        ("amide-coupling", "[N;!H0;!$(NC=O);!$(N-S);+0:1].[C:2](=[O:3])[OH]>>[N:1][C:2]=[O:3]",
         [AMINES, ACIDS]),
        ("sulfonamide", "[N;!H0;!$(NC=O);!$(N-S);+0:1].[S:2](=[O:3])(=[O:4])Cl>>[N:1][S:2](=[O:3])=[O:4]",
         [AMINES, SULFONYL_CHLORIDES]),
        ("esterification", "[OH1;$(OC);!$(OC=O):1].[C:2](=[O:3])Cl>>[O:1][C:2]=[O:3]",
         [ALCOHOLS, ACYL_CHLORIDES]),
    ],
    3: [
        ("suzuki", "[c:1][Br,I].[c:2]B(O)O>>[c:1]-[c:2]", [ARYL_HALIDES, BORONIC]),
    ],
    5: [
        ("boc-protection",
         "[N;!H0;!$(NC=O);!$(N-a);+0:1].[CH3:3][C:4]([CH3:5])([CH3:6])[O:7][C:8](=[O:9])OC(=O)OC(C)(C)C"
         ">>[N:1][C:8](=[O:9])[O:7][C:4]([CH3:3])([CH3:5])[CH3:6]",
         [AMINES, [BOC2O]]),
    ],
    6: [
        ("boc-deprotection", "[N:1]C(=O)OC([CH3])([CH3])[CH3]>>[N:1]", [BOC_AMINES]),
        ("ester-hydrolysis", "[C:1](=[O:2])[O:3][CH3,CH2;!$(C(C)(C)C)]>>[C:1](=[O:2])[OH:3]",
         [ESTERS]),
        ("debenzylation", "[O:1][CH2]c1ccccc1>>[O:1]", [BENZYL_ETHERS]),
    ],
    7: [
        ("nitro-reduction", "[c:1][N+:2](=O)[O-]>>[c:1][N+0:2]", [NITRO]),
        ("ketone-reduction", "[C:1]=[O:2]>>[C:1][O:2]", [KETONES]),
        ("ester-reduction", "[C:1](=[O:2])O[CH3,CH2]>>[C:1][O:2]", [ESTERS]),
    ],
    8: [
        ("alcohol-oxidation", "[CH2,CH1;!$(C=O):1][OH:2]>>[C:1]=[O:2]", [ALCOHOLS]),
    ],
    9: [
        ("alcohol-to-chloride", "[CH2:1][OH].[Cl:2]S(=O)Cl>>[C:1][Cl:2]",
         [ALCOHOLS, ["O=S(Cl)Cl"]]),
        ("acid-to-acyl-chloride", "[C:1](=[O:2])[OH].[Cl:3]S(=O)Cl>>[C:1](=[O:2])[Cl:3]",
         [ACIDS, ["O=S(Cl)Cl"]]),
        ("mesylation", "[OH1;$(OC);!$(OC=O):1].[S:2](=[O:3])(=[O:4])Cl>>[O:1][S:2](=[O:3])=[O:4]",
         [ALCOHOLS, ["CS(=O)(=O)Cl"]]),
    ],
}

# Approximate USPTO-50K class proportions (classes 4 and 10 omitted).
CLASS_WEIGHTS = {1: 30, 2: 24, 3: 11, 5: 2, 6: 16, 7: 9, 8: 2, 9: 4}


def clear_stereo_bonds(mol):
    for b in mol.GetBonds():
        b.SetStereo(Chem.BondStereo.STEREONONE)
        if b.GetBondDir() != Chem.BondDir.NONE:
            b.SetBondDir(Chem.BondDir.NONE)
    return mol


def run_template(smarts, reactant_smiles, rng):
    rxn = AllChem.ReactionFromSmarts(smarts)
    mols = [Chem.MolFromSmiles(s) for s in reactant_smiles]
    outcomes = rxn.RunReactants(tuple(mols))
    if not outcomes:
        return None
    products = []
    for out in outcomes:
        p = out[0]
        try:
            Chem.SanitizeMol(p)
        except Exception:
            continue
        products.append(p)
    if not products:
        return None
    product = products[rng.randrange(len(products))]

    # Product atom numbering follows canonical output order.
    clear_stereo_bonds(product)
    Chem.MolToSmiles(product)
    order = list(product.GetPropsAsDict(True, True)["_smilesAtomOutputOrder"])
    origin = {}
    for rank, idx in enumerate(order):
        atom = product.GetAtomWithIdx(idx)
        props = atom.GetPropsAsDict()
        if "react_idx" not in props:
            return None
        key = (props["react_idx"], props["react_atom_idx"])
        origin[key] = rank + 1
        atom.SetAtomMapNum(rank + 1)
    product_smiles = Chem.MolToSmiles(product)

    mapped_reactants = []
    for r, mol in enumerate(mols):
        mol = Chem.Mol(mol)
        clear_stereo_bonds(mol)
        for atom in mol.GetAtoms():
            atom.SetAtomMapNum(origin.get((r, atom.GetIdx()), 0))
        mapped_reactants.append(Chem.MolToSmiles(mol))
    if Chem.MolFromSmiles(product_smiles) is None:
        return None
    return ".".join(mapped_reactants), product_smiles


def heavy_atoms(smiles):
    return Chem.MolFromSmiles(smiles).GetNumHeavyAtoms()


def make_reactions(n, rng, max_product_atoms=None):
    classes = list(CLASS_WEIGHTS)
    weights = [CLASS_WEIGHTS[c] for c in classes]
    seen = set()
    out = []
    attempts = 0
    while len(out) < n and attempts < n * 200:
        attempts += 1
        cls = rng.choices(classes, weights)[0]
        name, smarts, pools = rng.choice(TEMPLATES[cls])
        reactants = [rng.choice(pool) for pool in pools]
        if max_product_atoms is not None and sum(map(heavy_atoms, reactants)) > max_product_atoms + 6:
            continue
        result = run_template(smarts, reactants, rng)
        if result is None:
            continue
        mapped_reactants, product = result
        if max_product_atoms is not None and heavy_atoms(product) > max_product_atoms:
            continue
        key = Chem.CanonSmiles(Chem.MolToSmiles(Chem.MolFromSmiles(product)))
        if key in seen:
            continue
        seen.add(key)
        out.append((cls, mapped_reactants, product))
    return out


EDGE_MOLECULES = [
    "C", "O", "N", "CCO", "C#N", "O=C=O", "C=C", "C#C", "[H][H]", "[2H]C([2H])([2H])[2H]",
    "[13CH4]", "[13CH3]O", "[NH4+]", "[Na+].[Cl-]", "[K+].[OH-]", "[O-][N+](=O)c1ccccc1",
    "C[N+](C)(C)C", "C[S+](C)C", "[Fe+2]", "[Cu]", "[Zn+2].[Cl-].[Cl-]", "B(O)O", "OB(O)c1ccccc1",
    "c1ccc2ccccc2c1", "c1ccc2[nH]ccc2c1", "c1cc[nH]c1", "c1ccoc1", "c1ccsc1", "c1cc[se]c1",
    "c1ccncc1", "c1cnc[nH]1", "Cn1ccnc1", "O=c1cc[nH]cc1", "c1ccc[n+](C)c1", "[O-]c1cccc[n+]1",
    "F[C@H](Cl)Br", "F[C@@H](Cl)Br", "C[C@H](N)C(=O)O", "C[C@@H](O)CC", "N[C@@H](Cc1ccccc1)C(=O)O",
    "C[C@]1(O)CCCC[C@@H]1C", "C[S@@](=O)c1ccccc1", "C[P+](C)(C)C", "CP(=O)(O)O", "OP(=O)(O)O",
    "CS(=O)(=O)O", "CS(C)=O", "FC(F)(F)F", "ClC(Cl)Cl", "BrCBr", "ICI", "C1CC1", "C1CCC1",
    "C12CC1C2", "C1CC2CCC1C2", "C1CCC2(CC1)CCCC2", "C%10CC%10", "c1ccc2c(c1)oc1ccccc12",
    "C[Si](C)(C)Cl", "C[Sn](C)(C)C", "[Li]C", "C[Mg]Br", "[SiH4]", "[se]1cccc1", "[CH2-]C",
    "[CH3+]", "[O-]C(=O)C", "C(=O)[O-].[Na+]", "N#[N+][O-]", "[N-]=[N+]=N", "CC(C)(C)OC(=O)N",
    "O=C(O)C(=O)O", "CC(=O)Nc1ccc(O)cc1", "CC(=O)Oc1ccccc1C(=O)O", "CN1C=NC2=C1C(=O)N(C)C(=O)N2C",
    "Cn1cnc2c1c(=O)n(C)c(=O)n2C", "CC(C)Cc1ccc(cc1)[C@@H](C)C(=O)O", "OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@@H]1O",
    "[nH]1cccc1", "c1ccccc1-c1ccccc1", "C1=CC=CC=C1", "C(Cl)(Cl)(Cl)Cl", "[I-].[K+]", "[Br-]",
    "[OH2]", "[NH3]", "[CH4]", "C[N-]C", "[O-][O-]", "O=O", "N#N", "S=C=S", "[S-2]", "[Ca+2]",
    "C[Se]C", "c1ccc2c(c1)[nH]c1ccccc12", "O=S1(=O)CCCC1", "C1COCCO1", "CC1=CC(=O)C=CC1=O",
]


def make_molecules(reactions, target, rng):
    mols = list(dict.fromkeys(EDGE_MOLECULES))
    pool = []
    for _, reactants, product in reactions:
        for s in reactants.split(".") + [product]:
            m = Chem.MolFromSmiles(s)
            for a in m.GetAtoms():
                a.SetAtomMapNum(0)
            pool.append(Chem.MolToSmiles(m))
    pool = list(dict.fromkeys(pool))
    rng.shuffle(pool)
    for s in pool:
        if len(mols) >= target:
            break
        if s not in mols:
            mols.append(s)
    return mols


def write_reactions(path, rows):
    with open(path, "w") as f:
        for cls, reactants, product in rows:
            f.write(f"{cls}\t{reactants}>>{product}\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=2026)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    sample = make_reactions(600, rng)
    write_reactions(f"{args.out}/sample_reactions.txt", sample)

    toy = make_reactions(48, random.Random(args.seed + 1), max_product_atoms=13)
    write_reactions(f"{args.out}/toy_train.txt", toy[:32])
    write_reactions(f"{args.out}/toy_valid.txt", toy[32:40])
    write_reactions(f"{args.out}/toy_test.txt", toy[40:48])

    with open(f"{args.out}/molecules_curated.txt", "w") as f:
        for s in make_molecules(sample, 200, rng):
            f.write(s + "\n")


if __name__ == "__main__":
    main()
