"""Tour of the two penalty functions and why their shapes matter.

Run: python3 demos/penalty_functions_tour.py
"""

import numpy as np

from gcm import huber, huber_prime, smoothed_hinge, smoothed_hinge_prime


def table(header, rows):
    print(header)
    for row in rows:
        print("  " + "  ".join(f"{v:>10}" for v in row))
    print()


def main():
    print("=" * 70)
    print("Huber weight penalty: quadratic near zero, linear in the tails")
    print("=" * 70)
    ts = np.array([-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0])
    for eps in (0.1, 1.0, 10.0):
        vals = huber(ts, eps)
        primes = huber_prime(ts, eps)
        table(f"epsilon = {eps}", [
            ["t"] + [f"{t:.2f}" for t in ts],
            ["h(t)"] + [f"{v:.4f}" for v in vals],
            ["h'(t)"] + [f"{v:.4f}" for v in primes],
        ])
    print("Small epsilon approaches |t| (sparse-friendly); large epsilon")
    print("approaches t^2/(2 eps), a scaled squared norm.\n")

    print("=" * 70)
    print("Smoothed hinge: cheaper in-margin penalties than the exact hinge")
    print("=" * 70)
    ts = np.array([-1.0, -0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5])
    for delta in (0.0, 0.25, 0.5):
        vals = smoothed_hinge(ts, delta)
        primes = smoothed_hinge_prime(ts, delta)
        table(f"delta = {delta}", [
            ["t"] + [f"{t:.2f}" for t in ts],
            ["L(t)"] + [f"{v:.4f}" for v in vals],
            ["L'(t)"] + [f"{v:.4f}" for v in primes],
        ])

    print("Cost ratio of one true error (margin -1/2) versus one in-margin")
    print("non-error (margin +1/2):")
    for delta in (0.0, 0.5):
        ratio = smoothed_hinge(-0.5, delta) / smoothed_hinge(0.5, delta)
        print(f"  delta={delta}: ratio = {ratio:g}")
    print("\nAt delta=0.5 a true error costs 8 in-margin examples instead of 3,")
    print("so training concentrates on actual mistakes.")


if __name__ == "__main__":
    main()
