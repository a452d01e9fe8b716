"""Recompute the two worked examples and print the key numbers.

    python3 scripts/reproduce_examples.py
"""

import numpy as np

from simorbit.chain import time_reversal
from simorbit.gmc import check_gmc, theorem_mc_pipeline
from simorbit.io import load_chain
from simorbit.purebirth import pure_birth_conjugate
from simorbit.cli import resolve_input


def main() -> None:
    np.set_printoptions(precision=6, suppress=True)

    phat = load_chain(resolve_input("gmc4_reversal.json")).with_stationary()
    P = time_reversal(phat)
    print("monotone kernel P (reversal of the bundled P_hat):")
    print(P.matrix)
    print("eigenvalues:", np.sort(np.linalg.eigvals(P.matrix).real)[::-1])
    rep = check_gmc(P)
    print("member:", rep.member, " member_plus:", rep.member_plus,
          " violated:", sorted(rep.violated_conditions()))
    red = theorem_mc_pipeline(P)
    print("restricted dual:")
    print(red.reduced)
    print("Perron transform row sums:", red.Q_perron.matrix.sum(axis=1))

    G = load_chain(resolve_input("g5.json"))
    conj = pure_birth_conjugate(G)
    print("\npure-birth conjugate L:")
    print(conj.L.matrix)
    print("pi_L:", conj.pi_L, " markovian:", conj.markovian)


if __name__ == "__main__":
    main()
