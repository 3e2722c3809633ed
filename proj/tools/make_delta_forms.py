#!/usr/bin/env python3
"""Write q-expansions of level-one cusp forms built from the discriminant.

Each output file is JSON-lines, one form per line, coefficients a_1..a_M as
decimal strings. Exact integer arithmetic throughout.

  weight 12: Delta
  weight 24: Delta^2, Delta*E4^3
  weight 36: Delta^3, Delta^2*E4^3, Delta*E4^6
"""
import argparse
import json
import os


def mul(a, b, n):
    out = [0] * n
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j in range(n - i):
            out[i + j] += x * b[j]
    return out


def delta(n):
    # q * prod (1 - q^m)^24, coefficients indexed from q^0
    p = [0] * n
    p[0] = 1
    for m in range(1, n):
        for _ in range(24):
            for i in range(n - 1, m - 1, -1):
                p[i] -= p[i - m]
    return [0] + p[: n - 1]


def e4(n):
    out = [0] * n
    out[0] = 1
    for m in range(1, n):
        out[m] = 240 * sum(d ** 3 for d in range(1, m + 1) if m % d == 0)
    return out


def power(a, e, n):
    out = [1] + [0] * (n - 1)
    for _ in range(e):
        out = mul(out, a, n)
    return out


def write(path, forms):
    with open(path, "w") as fh:
        for label, weight, coeffs in forms:
            rec = {"label": label, "weight": weight,
                   "coefficients": [str(c) for c in coeffs[1:]]}
            fh.write(json.dumps(rec) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--terms", type=int, default=150)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = ap.parse_args()
    n = args.terms + 1
    d = delta(n)
    e = e4(n)
    e3 = power(e, 3, n)
    e6 = mul(e3, e3, n)
    d2 = mul(d, d, n)
    d3 = mul(d2, d, n)
    write(os.path.join(args.out, "delta.jsonl"), [("Delta", 12, d)])
    write(os.path.join(args.out, "delta_w24.jsonl"),
          [("Delta*E4^3", 24, mul(d, e3, n)), ("Delta^2", 24, d2)])
    write(os.path.join(args.out, "delta_w36.jsonl"),
          [("Delta*E4^6", 36, mul(d, e6, n)), ("Delta^2*E4^3", 36, mul(d2, e3, n)),
           ("Delta^3", 36, d3)])


if __name__ == "__main__":
    main()
