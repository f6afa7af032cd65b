"""p-value against point-null posteriors over x/sigma, and under repetition."""
import argparse

import numpy as np

from renyi.paradox import lindley_repetition_curve, test_statistic_curve


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--max", type=float, default=4.0, help="largest x/sigma")
    p.add_argument("--points", type=int, default=81)
    args = p.parse_args()

    c = test_statistic_curve(np.linspace(0, args.max, args.points), args.sigma)
    print("x_over_sigma,p_value,posterior_flat,posterior_scaled")
    for row in c.rows():
        print(",".join(f"{v:.17g}" for v in row))

    sched = [1, 10, 100, 1_000, 10_000, 100_000, 1_000_000]
    for label, xbar, hold in [("mean 0", 0.0, "mean"), ("mean 0.1", 0.1, "mean"),
                              ("statistic 1.96", 1.96, "statistic")]:
        print(f"\nrepetition, fixed {label}")
        print("N,posterior,p_value")
        for r in lindley_repetition_curve(xbar, args.sigma, sched, hold):
            print(f"{r.n},{r.posterior:.6g},{r.p_value:.6g}")


if __name__ == "__main__":
    main()
