"""Window masses on a battery of integrands with closed-form answers."""
import math

import numpy as np
import pytest
from scipy.special import beta, gamma, gammaln

from renyi.integrate import FINITE, INFINITE, Transform, integrate_interval
from renyi.measure import RenyiState, window_mass
from renyi.windows import BaseMeasure, WindowSet

LINE = BaseMeasure.line()
HALF = BaseMeasure.half_line()
UNIT = BaseMeasure.line(0.0, 1.0)
INF = math.inf


def _state(base, f):
    return RenyiState(base, f)


CASES = [
    ("flat on [-1, 1]", LINE, lambda x: np.zeros_like(x), WindowSet.interval(-1, 1), 2.0),
    ("flat line", LINE, lambda x: np.zeros_like(x), LINE.whole(), INF),
    ("1/x on (0, inf)", HALF, lambda x: -np.log(x), HALF.whole(), INF),
    ("1/x on (0, 1]", HALF, lambda x: -np.log(x), WindowSet.interval(0, 1), INF),
    ("1/x on [1, inf)", HALF, lambda x: -np.log(x), WindowSet.interval(1, INF), INF),
    ("x^-1.5 on [1, inf)", HALF, lambda x: -1.5 * np.log(x), WindowSet.interval(1, INF), 2.0),
    ("x^-0.5 on (0, 1]", HALF, lambda x: -0.5 * np.log(x), WindowSet.interval(0, 1), 2.0),
    ("x^2 e^-2x", HALF, lambda x: 2 * np.log(x) - 2 * x, HALF.whole(), 0.25),
    ("e^-x / x", HALF, lambda x: -x - np.log(x), HALF.whole(), INF),
    ("gaussian far out", LINE, lambda x: -0.5 * (x - 1000.0) ** 2, LINE.whole(), math.sqrt(2 * math.pi)),
    ("narrow gaussian", LINE, lambda x: -0.5 * (x / 1e-3) ** 2, LINE.whole(), 1e-3 * math.sqrt(2 * math.pi)),
    ("very narrow gaussian", LINE, lambda x: -0.5 * (x / 1e-13) ** 2, LINE.whole(),
     1e-13 * math.sqrt(2 * math.pi)),
    ("|x - 0.3|^-1", LINE, lambda x: -np.log(np.abs(x - 0.3)), WindowSet.interval(-1, 1), INF),
    ("|x|^-1", LINE, lambda x: -np.log(np.abs(x)), WindowSet.interval(-1, 1), INF),
    ("|x - 0.3|^-1 with hole", LINE, lambda x: -np.log(np.abs(x - 0.3)),
     WindowSet.interval(-1, 1).without((0.2, 0.4)), math.log(13) + math.log(7)),
    ("|x - 0.3|^-0.5", LINE, lambda x: -0.5 * np.log(np.abs(x - 0.3)), WindowSet.interval(-1, 1),
     2 * math.sqrt(1.3) + 2 * math.sqrt(0.7)),
    ("|x|^-0.5", LINE, lambda x: -0.5 * np.log(np.abs(x)), WindowSet.interval(-1, 1), 4.0),
    ("|x|^-1 tail", LINE, lambda x: -np.log(np.abs(x)), WindowSet.interval(1, INF), INF),
    ("cauchy", LINE, lambda x: -np.log1p(x * x), LINE.whole(), math.pi),
    ("e^-2x / x on [1, 3]", HALF, lambda x: -2 * x - np.log(x), WindowSet.interval(1, 3),
     0.04854042825589846),
]


@pytest.mark.parametrize("name, base, f, w, expect", CASES, ids=[c[0] for c in CASES])
def test_battery(name, base, f, w, expect):
    m = window_mass(_state(base, f), w)
    if expect == INF:
        assert m.is_infinite, m
    else:
        assert m.is_finite, m
        assert m.value == pytest.approx(expect, rel=1e-8)


@pytest.mark.parametrize("x", range(11))
def test_haldane_sections(x):
    n = 10
    s = _state(UNIT, lambda p: (x - 1) * np.log(p) + (n - x - 1) * np.log1p(-p))
    m = window_mass(s, UNIT.whole())
    if x in (0, n):
        assert m.is_infinite
    else:
        assert m.value == pytest.approx(beta(x, n - x), rel=1e-8)


def test_plane_masses():
    plane = BaseMeasure.plane()
    flat = _state(plane, lambda p: np.zeros(p.shape[:-1]))
    assert window_mass(flat, plane.whole()).is_infinite
    assert window_mass(flat, WindowSet.box((0, 1), (0, 2))).value == pytest.approx(2.0, rel=1e-10)


def test_location_scale_box_matches_nested_scipy():
    from scipy import integrate
    base = BaseMeasure.plane(y=(0.0, INF))
    s = _state(base, lambda p: -2 * np.log(p[..., 1]) - 0.5 * ((p[..., 0] - 1) / p[..., 1]) ** 2)
    m = window_mass(s, WindowSet.box((-2, 2), (0.5, 3)), 1e-10)
    ref, _ = integrate.dblquad(lambda sg, g: sg ** -2 * math.exp(-0.5 * ((g - 1) / sg) ** 2),
                               -2, 2, 0.5, 3, epsabs=0, epsrel=1e-12)
    assert m.value == pytest.approx(ref, rel=1e-8)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_location_scale_whole_is_infinite():
    base = BaseMeasure.plane(y=(0.0, INF))
    s = _state(base, lambda p: -2 * np.log(p[..., 1]) - 0.5 * ((p[..., 0] - 1) / p[..., 1]) ** 2)
    assert window_mass(s, base.whole()).is_infinite


def test_counting_masses():
    c = BaseMeasure.counting()
    pois = _state(c, lambda k: k * math.log(2) - 2 - gammaln(k + 1))
    assert window_mass(pois, c.whole()).value == pytest.approx(1.0, rel=1e-12)
    assert window_mass(_state(c, lambda k: np.zeros_like(k)), c.whole()).is_infinite
    geo = _state(c, lambda k: -k * math.log(2))
    assert window_mass(geo, WindowSet.interval(1, 3)).value == pytest.approx(0.875)


def test_atom_masses_add_to_lebesgue_part():
    base = BaseMeasure.line_with_atoms((0.0,), -1.0, 1.0)
    s = _state(base, lambda x: np.where(x == 0.0, math.log(3.0), 0.0))
    assert window_mass(s, base.whole()).value == pytest.approx(5.0)
    assert window_mass(s, WindowSet.interval(-1, 1, atoms=())).value == pytest.approx(2.0)
    assert window_mass(s, WindowSet.point(0.0)).value == pytest.approx(3.0)


def test_transforms_round_trip():
    for lo, hi in [(-INF, INF), (0.0, INF), (-INF, 2.0), (0.0, 1.0), (-3.0, 5.0)]:
        t = Transform.for_domain(lo, hi)
        x = np.array([v for v in (-2.5, 0.1, 0.5, 0.9, 1.7, 4.0) if lo < v < hi])
        u = np.array([t.to_u(float(v)) for v in x])
        np.testing.assert_allclose(t.to_x(u), x, rtol=1e-13)


def test_integrate_interval_reports_infinite_tail():
    r = integrate_interval(lambda u: np.zeros_like(u), 0.0, INF, safe=(-1e300, 1e300))
    assert r.status == INFINITE


def test_integrate_interval_finite_tail():
    r = integrate_interval(lambda u: -u, 0.0, INF, safe=(-1e300, 1e300))
    assert r.status == FINITE and math.exp(r.log_value) == pytest.approx(1.0, rel=1e-9)


def test_log_periodic_tail_is_finite():
    # (1 + 0.9 sin(pi log2 t)) (1 + t)^-1.05 decays slowly under an oscillating
    # factor; the Mellin transform of (1 + t)^-a gives the exact mass
    a, w = 1.05, math.pi / math.log(2)
    s = complex(1.0, w)
    exact = 1 / (a - 1) + 0.9 * (gamma(s) * gamma(a - s) / gamma(a)).imag
    f = lambda t: np.log1p(0.9 * np.sin(w * np.log(t))) - a * np.log1p(t)
    m = window_mass(_state(HALF, f), HALF.whole())
    assert m.is_finite, m
    assert m.value == pytest.approx(exact, rel=1e-8)
