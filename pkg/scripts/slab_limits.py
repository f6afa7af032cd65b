"""Prior sequences for the point null at x = 1.96.

Widening normal slabs drive pi_n(0 | x) to 1, while the window priors
pi*_n converge to the scale-invariant answer pi*(0 | x).
"""
from renyi.paradox import bayes_test_posterior, scaled_prior_posterior, window_prior_posterior
from renyi.zoo import normal_slab


def main(x=1.96):
    print(f"normal slabs, pi(0) = 1/2, x = {x}")
    print("tau       posterior")
    for tau in (1, 10, 100, 1e3, 1e4, 1e5):
        print(f"{tau:<8g}  {bayes_test_posterior(x, 1.0, 0.5, normal_slab(tau, 0.5)):.6f}")

    print(f"\nwindow priors, limit pi*(0 | x) = {scaled_prior_posterior(x):.6f}")
    print("n      posterior")
    for n in (1, 2, 5, 10, 100, 1000):
        print(f"{n:<5d}  {window_prior_posterior(x, 1.0, n):.6f}")


if __name__ == "__main__":
    main()
