"""Extractive-fragment density for the fixture pairs in density_fixtures.json.

Mirrors the greedy fragment matcher from the Newsroom release, with the
harness's tokenization (lowercase, strip edge punctuation, drop punctuation-
only tokens). Prints the frozen expected values.
"""
import json
import pathlib


def tokens(s):
    out = []
    for w in s.split():
        b, e = 0, len(w)
        while b < e and not w[b].isalnum():
            b += 1
        while e > b and not w[e - 1].isalnum():
            e -= 1
        if e > b:
            out.append(w[b:e].lower())
    return out


def fragments(S, A):
    F = []
    i = j = 0
    while i < len(S):
        f = []
        while j < len(A):
            if S[i] == A[j]:
                i2, j2 = i, j
                while i2 < len(S) and j2 < len(A) and S[i2] == A[j2]:
                    i2 += 1
                    j2 += 1
                if len(f) < i2 - i:
                    f = S[i:i2]
                j = j2
            else:
                j += 1
        i, j = i + max(len(f), 1), 0
        if f:
            F.append(f)
    return F


def density(summary, document):
    S, A = tokens(summary), tokens(document)
    if not S:
        return 0.0
    return sum(len(f) ** 2 for f in fragments(S, A)) / len(S)


here = pathlib.Path(__file__).parent
for case in json.loads((here / "density_fixtures.json").read_text())["cases"]:
    print(f'{case["id"]}\t{density(case["summary"], case["document"])!r}')
