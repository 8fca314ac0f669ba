#!/usr/bin/env python3
"""Regenerate crates/core/data/characters.txt from a WordNet 3.0 database.

A lemma is accepted when its first (most frequent) noun sense lies under
person.n.01, animal.n.01 or vehicle.n.01 in the hypernym / instance-hypernym
graph. Multi-word lemmas are skipped since mentions are single tokens.

usage: gen_lexicon.py WORDNET_DICT_DIR > characters.txt

The dict directory must contain index.noun and data.noun (or the split
data.noun1 / data.noun2 pair shipped by some distributions).
"""
import os
import sys

ROOTS = {"person": 1, "animal": 1, "vehicle": 1}  # lemma -> sense number


def read_data(dict_dir):
    names = ["data.noun"]
    if not os.path.exists(os.path.join(dict_dir, "data.noun")):
        names = ["data.noun1", "data.noun2"]
    hypernyms = {}
    for name in names:
        with open(os.path.join(dict_dir, name), encoding="latin-1") as fh:
            for line in fh:
                if line.startswith("  "):
                    continue
                fields = line.split()
                offset = fields[0]
                n_words = int(fields[3], 16)
                pos = 4 + 2 * n_words
                n_ptrs = int(fields[pos])
                pos += 1
                ups = []
                for _ in range(n_ptrs):
                    symbol, target, target_pos = fields[pos], fields[pos + 1], fields[pos + 2]
                    if symbol in ("@", "@i") and target_pos == "n":
                        ups.append(target)
                    pos += 4
                hypernyms[offset] = ups
    return hypernyms


def read_index(dict_dir):
    first_sense = {}
    with open(os.path.join(dict_dir, "index.noun"), encoding="latin-1") as fh:
        for line in fh:
            if line.startswith("  "):
                continue
            fields = line.split()
            lemma = fields[0]
            n_ptr_kinds = int(fields[3])
            synsets = fields[4 + n_ptr_kinds + 2:]
            first_sense[lemma] = synsets
    return first_sense


def main():
    dict_dir = sys.argv[1]
    hypernyms = read_data(dict_dir)
    index = read_index(dict_dir)
    roots = {index[lemma][sense - 1] for lemma, sense in ROOTS.items()}

    memo = {}

    def under_root(offset, stack=()):
        if offset in memo:
            return memo[offset]
        if offset in roots:
            memo[offset] = True
            return True
        result = any(under_root(up) for up in hypernyms.get(offset, []))
        memo[offset] = result
        return result

    sys.setrecursionlimit(10000)
    accepted = sorted(
        lemma
        for lemma, synsets in index.items()
        if "_" not in lemma and synsets and under_root(synsets[0])
    )
    print("# Single-token nouns whose primary WordNet 3.0 sense is a hyponym of")
    print("# person.n.01, animal.n.01 or vehicle.n.01. Generated by tools/gen_lexicon.py.")
    for lemma in accepted:
        print(lemma)


if __name__ == "__main__":
    main()
