"""Two conditionals for theta in the exponential-ratio model, for several priors and z."""
import numpy as np

from renyi.paradox import marginalization_pair, route_a_by_quadrature

PRIORS = {
    "flat": None,
    "1/theta": lambda th: -np.log(th),
    "theta^0.5": lambda th: 0.5 * np.log(th),
}


def main():
    theta = np.geomspace(1e-2, 1e2, 41)
    print("prior      z    equivalent  log_ratio_std  profile_spread  quadrature_spread")
    for name, lp in PRIORS.items():
        for z in (0.5, 1.0, 2.0):
            r = marginalization_pair(lp, z, theta)
            profile = np.ptp(r.log_ratio + np.log(theta + z))
            quad = route_a_by_quadrature(lp, 1.0, z, theta) - r.route_a.logpdf(theta)
            print(f"{name:9s}  {z:3.1f}  {str(r.equivalent):10s}  {r.log_ratio_std:13.4f}  "
                  f"{profile:14.1e}  {np.ptp(quad):17.1e}")


if __name__ == "__main__":
    main()
