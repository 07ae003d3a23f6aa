"""Compare empirical decryption outcomes against the exact oracle.

Usage: python scripts/distribution_histogram.py [--runs 2000] [--seed 3]
       [--pivs 010 101]

Runs the full gate-level protocol many times with no decoys and no
adversary, counts the joint register outcomes, and prints the most frequent
ones next to their exact probabilities, plus a chi-square p-value over the
whole support. Slow growth: each run simulates every tuple.
"""

import argparse
from collections import Counter

import numpy as np
from scipy import stats as scipy_stats

from ghzcast import BitVector, Scenario, concat_secrets, execute_run, joint_oracle

BAR_WIDTH = 40


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--pivs", nargs="+", default=["010", "101"])
    args = ap.parse_args()

    secrets = tuple(BitVector.from_text(t) for t in args.pivs)
    n = len(secrets) + 1
    payload, _ = concat_secrets(secrets)
    dist = joint_oracle(payload, n)

    master = np.random.default_rng(args.seed)
    seeds = master.integers(0, 2**63, size=args.runs)
    counts: Counter[int] = Counter()
    for s in seeds:
        outcome = execute_run(Scenario(n=n, secrets=secrets, d=0, seed=int(s)))
        registers = outcome.transcript.registers
        counts[dist.key_from_registers(registers)] += 1

    off_support = sum(c for key, c in counts.items() if key not in dist.entries)
    print(f"payload {payload}, {len(dist.entries)} outcomes in the exact support")
    print(f"{args.runs} runs, {off_support} outcomes off support\n")

    top = counts.most_common(15)
    peak = top[0][1]
    for key, c in top:
        bar = "#" * max(1, round(BAR_WIDTH * c / peak))
        print(f"{dist.render_key(key)}  {c:6d}  exact {dist.probability(key):.6f}  {bar}")

    observed = np.array([counts.get(key, 0) for key in dist.support()])
    expected = np.array([p for _, p in sorted(dist.entries.items())]) * args.runs
    p = scipy_stats.chisquare(observed, expected).pvalue
    print(f"\nchi-square over the full support: p = {p:.4f}")


if __name__ == "__main__":
    main()
