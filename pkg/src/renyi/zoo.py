"""Built-in joint models, addressable by name.

Each constructor commits to the density stated in its docstring, including
data-only factors such as t^x / x! that cancel in posteriors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln, xlogy

from .bayes import JointModel, Likelihood
from .measure import RenyiState, TailHint
from .windows import BaseMeasure

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _count(x) -> int:
    k = int(x)
    if k != x or k < 0:
        raise ValueError(f"count data must be a nonnegative integer, got {x!r}")
    return k


def poisson_process_model(t: float = 1.0) -> JointModel:
    """Counts x ~ Poisson(lambda t) under the scale-invariant prior 1/lambda.

    f(x, lambda) = lambda^(x-1) exp(-lambda t) t^x / x! over counting x (0, inf).
    """
    if not t > 0:
        raise ValueError("exposure t must be positive")

    def kernel(x, lam):
        k = _count(x)
        lam = np.asarray(lam, dtype=float)
        with np.errstate(divide="ignore"):
            return (k - 1) * np.log(lam) - lam * t

    def factor(x):
        k = _count(x)
        return k * np.log(t) - gammaln(k + 1)

    def hints(x):
        k = _count(x)
        return {"lower": TailHint(power=k - 1.0), "upper": TailHint(power=k - 1.0, rate=t)}

    return JointModel(BaseMeasure.counting(), BaseMeasure.half_line(), kernel, factor,
                      f"poisson(t={t:g})", hints)


def poisson_stage(t: float = 1.0) -> Likelihood:
    """Poisson likelihood lambda^x exp(-lambda t) t^x / x! for one exposure period."""
    if not t > 0:
        raise ValueError("exposure t must be positive")

    def loglik(x, lam):
        k = _count(x)
        lam = np.asarray(lam, dtype=float)
        return xlogy(k, lam) - lam * t + k * np.log(t) - gammaln(k + 1)

    def hints(x):
        k = _count(x)
        return {"lower": TailHint(power=float(k)), "upper": TailHint(power=float(k), rate=t)}

    return Likelihood(BaseMeasure.counting(), loglik, hints, f"poisson stage(t={t:g})")


def scale_invariant_prior() -> RenyiState:
    """The improper prior 1/lambda on (0, inf)."""
    return RenyiState(BaseMeasure.half_line(), lambda lam: -np.log(lam),
                      tail_hint={"lower": TailHint(-1.0), "upper": TailHint(-1.0)}, label="1/lambda")


def haldane_binomial_model(n: int = 10) -> JointModel:
    """Binomial(n, p) counts under the Haldane prior p^-1 (1-p)^-1.

    f(x, p) = C(n, x) p^(x-1) (1-p)^(n-x-1) over counting {0..n} x (0, 1).
    """
    n = _count(n)
    if n < 1:
        raise ValueError("need at least one trial")

    def check(x):
        k = _count(x)
        if k > n:
            raise ValueError(f"x={k} exceeds n={n}")
        return k

    def kernel(x, p):
        k = check(x)
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            return (k - 1) * np.log(p) + (n - k - 1) * np.log1p(-p)

    def factor(x):
        k = check(x)
        return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)

    def hints(x):
        k = check(x)
        return {"lower": TailHint(power=k - 1.0), "upper": TailHint(power=n - k - 1.0)}

    return JointModel(BaseMeasure.counting(upper=n), BaseMeasure.line(0.0, 1.0), kernel, factor,
                      f"haldane(n={n})", hints)


# slab densities for the point-null model; each already includes its weight


def flat_slab(c: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda th: np.full(np.shape(th), float(c))


def normal_slab(tau: float, weight: float) -> Callable[[np.ndarray], np.ndarray]:
    def g(th):
        th = np.asarray(th, dtype=float)
        return weight * np.exp(-0.5 * (th / tau) ** 2) / (np.sqrt(2 * np.pi) * tau)
    return g


def uniform_slab(k: float, weight: float) -> Callable[[np.ndarray], np.ndarray]:
    def g(th):
        th = np.asarray(th, dtype=float)
        return np.where(np.abs(th) <= k, weight / (2 * k), 0.0)
    return g


def normal_point_mass_model(sigma: float, pi0: float,
                            slab: Callable[[np.ndarray], np.ndarray]) -> JointModel:
    """x ~ N(theta, sigma^2), prior pi0 at theta = 0 plus slab(theta) d theta.

    The parameter base is delta_0 + Lebesgue; the log-density at the atom is
    log(pi0) + log f(x | 0).
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not pi0 > 0:
        raise ValueError("the atom mass must be positive")

    def kernel(x, th):
        th = np.asarray(th, dtype=float)
        loglik = -0.5 * ((float(x) - th) / sigma) ** 2 - np.log(sigma) - LOG_SQRT_2PI
        with np.errstate(divide="ignore"):
            prior = np.where(th == 0.0, np.log(pi0), np.log(slab(th)))
        return loglik + prior

    return JointModel(BaseMeasure.line(), BaseMeasure.line_with_atoms((0.0,)), kernel,
                      label=f"normal point mass(sigma={sigma:g}, pi0={pi0:g})")


def normal_location_scale_model() -> JointModel:
    """x ~ N(gamma, sigma^2) with prior 1/sigma on R x (0, inf).

    f(x, gamma, sigma) = sigma^-2 exp(-(x - gamma)^2 / (2 sigma^2)) / sqrt(2 pi).
    """
    def kernel(x, th):
        th = np.asarray(th, dtype=float)
        g, s = th[..., 0], th[..., 1]
        with np.errstate(divide="ignore", over="ignore"):
            return -2.0 * np.log(s) - 0.5 * ((float(x) - g) / s) ** 2

    return JointModel(BaseMeasure.line(), BaseMeasure.plane(y=(0.0, np.inf)), kernel,
                      lambda x: -LOG_SQRT_2PI, "normal location-scale")


def exponential_ratio_model(log_prior: Callable[[np.ndarray], np.ndarray] | None = None) -> JointModel:
    """Exponential pair with hazards theta phi and phi, data (x, z = y / x).

    f(x, z, theta, phi) = pi(theta) theta phi^2 x exp(-phi x (theta + z)) with
    the prior pi(theta) d theta d phi; ``log_prior`` defaults to pi = 1.
    """
    lp = log_prior or (lambda th: np.zeros(np.shape(th)))
    pos = BaseMeasure.plane(x=(0.0, np.inf), y=(0.0, np.inf))

    def kernel(data, th):
        x, z = (float(v) for v in data)
        if not (x > 0 and z > 0):
            raise ValueError("data (x, z) must be positive")
        th = np.asarray(th, dtype=float)
        theta, phi = th[..., 0], th[..., 1]
        with np.errstate(divide="ignore"):
            return lp(theta) + np.log(theta) + 2.0 * np.log(phi) + np.log(x) - phi * x * (theta + z)

    return JointModel(pos, pos, kernel, label="exponential ratio")


@dataclass(frozen=True)
class ZooEntry:
    build: Callable[..., JointModel]
    params: dict
    data_kind: str  # count | real | pair
    help: str


MODELS: dict[str, ZooEntry] = {
    "poisson": ZooEntry(poisson_process_model, {"t": 1.0}, "count",
                        "Poisson counts, prior 1/lambda"),
    "haldane": ZooEntry(haldane_binomial_model, {"n": 10}, "count",
                        "binomial counts, Haldane prior"),
    "location-scale": ZooEntry(normal_location_scale_model, {}, "real",
                               "normal data, prior 1/sigma on (gamma, sigma)"),
    "exponential-ratio": ZooEntry(exponential_ratio_model, {}, "pair",
                                  "exponential ratio, flat prior on theta"),
}


def build_model(name: str, **params) -> JointModel:
    if name not in MODELS:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    entry = MODELS[name]
    unknown = set(params) - set(entry.params)
    if unknown:
        raise KeyError(f"model {name!r} has no parameters {sorted(unknown)}")
    kwargs = {**entry.params, **params}
    if name == "haldane":
        kwargs["n"] = int(kwargs["n"])
    return entry.build(**kwargs)
