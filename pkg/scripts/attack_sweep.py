"""Sweep the attack strategies and print detection and guessing statistics.

Usage: python scripts/attack_sweep.py [--trials 400] [--d 60] [--seed 7]

Each row is one strategy configuration run --trials times. Expected columns:
measure/resend in the computational basis disturbs half the attacked decoy
qubits, random-basis a quarter; replacement and ancilla attacks one half.
The per-tuple rate for replacement grows as 1 - 2^-k.
"""

import argparse

from ghzcast import BitVector, EveStrategy, Scenario, detection_experiment

SWEEP = [
    ("measure_resend/comp k=1", 3, EveStrategy(tag="measure_resend", basis_policy="always_computational", k=1)),
    ("measure_resend/rand k=1", 3, EveStrategy(tag="measure_resend", basis_policy="random_basis", k=1)),
    ("measure_resend/comp k=2", 3, EveStrategy(tag="measure_resend", basis_policy="always_computational", k=2)),
    ("intercept_replace  k=1", 3, EveStrategy(tag="intercept_replace", k=1)),
    ("intercept_replace  k=2", 3, EveStrategy(tag="intercept_replace", k=2)),
    ("intercept_replace  k=3", 4, EveStrategy(tag="intercept_replace", k=3)),
    ("entangle_ancilla   k=1", 3, EveStrategy(tag="entangle_ancilla", k=1)),
    ("entangle_ancilla   k=2", 3, EveStrategy(tag="entangle_ancilla", k=2)),
]


def secrets_for(n: int) -> tuple[BitVector, ...]:
    base = ["010", "101", "110"]
    return tuple(BitVector.from_text(base[i % 3]) for i in range(n - 1))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=400)
    ap.add_argument("--d", type=int, default=60)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    header = f"{'strategy':26s} {'abort':>7s} {'qubit_err':>10s} {'tuple_err':>10s} {'eve_acc':>8s}"
    print(header)
    print("-" * len(header))
    for name, n, eve in SWEEP:
        sc = Scenario(
            n=n,
            secrets=secrets_for(n),
            d=args.d,
            threshold_fraction=0.125,
            eve=eve,
            seed=args.seed,
        )
        st = detection_experiment(sc, args.trials)
        print(
            f"{name:26s} {st.abort_rate:7.3f} {st.attacked_error_rate:10.4f} "
            f"{st.tuple_error_rate:10.4f} {st.eve_accuracy:8.4f}"
        )

    honest = Scenario(n=3, secrets=secrets_for(3), d=args.d, seed=args.seed)
    st = detection_experiment(honest, args.trials)
    print(f"{'honest baseline':26s} {st.abort_rate:7.3f} {'-':>10s} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
