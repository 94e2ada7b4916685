"""Executable algebraic inequalities backing the analysis pipeline.

Each predicate evaluates both sides of one elementary inequality used when
testing Green fields against soft-clamped or powered versions of
themselves. They hold for every admissible input; the sampling suite
hammers them with log-uniform magnitudes and boundary-concentrated
exponents and reports the worst deficit.

Differences of powers are evaluated through expm1/log1p so near-equal
arguments do not lose the inequality to cancellation, and prefactors of
the form 2^(1/s) are kept in log2 space. The exponent s is sampled down
to 1e-3: below that 2^(1/s) leaves the double range and the formulas stop
being evaluable at all.

A tolerance of 1e-12 relative on (rhs - lhs) absorbs roundoff at
near-equality points; anything beyond it is a hard failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFICIT_TOL = 1e-12

__all__ = [
    "DEFICIT_TOL",
    "soft_clamp",
    "lhs_rhs_clamp_energy",
    "holds_clamp_energy",
    "holds_root_increment",
    "holds_log_square",
    "holds_weighted_power",
    "holds_quadratic_split",
    "holds_clamp_duality",
    "InequalityResult",
    "run_inequality_suite",
]


def _ok(lhs, rhs):
    return lhs <= rhs + DEFICIT_TOL * (1.0 + np.abs(rhs))


def soft_clamp(t, s):
    """t (1 + t^s)^(-1/s): increasing map of [0, inf) onto [0, 1)."""
    t = np.asarray(t, dtype=float)
    return t * (1.0 + t**s) ** (-1.0 / s)


def _power_diff(la, lb, p):
    """e^(p lb) - e^(p la) from logs, stable when the exponents nearly tie."""
    return -np.exp(p * lb) * np.expm1(p * (la - lb))


def _psi_diff(a, b, s):
    """(1+b)^((1-s)/2) - (1+a)^((1-s)/2) without cancellation."""
    return _power_diff(np.log1p(a), np.log1p(b), (1.0 - s) / 2.0)


def _clamp_diff(a, b, s):
    """soft_clamp(b, s) - soft_clamp(a, s) via log evaluation."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore"):
        la = np.log(a) - np.log1p(a**s) / s
        lb = np.log(b) - np.log1p(b**s) / s
    return _power_diff(la, lb, 1.0)


def _clamp_prefactor(s):
    """4 * 2^s / 2^(1/s) * (1-s)^-2 with the 2-powers in log2 space."""
    return np.exp2(2.0 + s - 1.0 / s) * (1.0 - s) ** -2.0


def lhs_rhs_clamp_energy(a, b, s):
    """Chord-energy bound for the soft clamp.

    With psi(t) = (1+t)^((1-s)/2) and Phi the soft clamp,

        (4 * 2^s / 2^(1/s)) (1-s)^-2 (psi(b) - psi(a))^2
            <= (b - a)(Phi(b) - Phi(a)).

    The prefactor is the largest one of this shape that survives the
    pointwise bound Phi'(t) >= c(s) psi'(t)^2 (minimized at t = 1) combined
    with the Cauchy-Schwarz inequality on [a, b]. Returns (lhs, rhs).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lhs = _clamp_prefactor(s) * _psi_diff(a, b, s) ** 2
    rhs = (b - a) * _clamp_diff(a, b, s)
    return lhs, rhs


def holds_clamp_energy(a, b, s):
    lhs, rhs = lhs_rhs_clamp_energy(a, b, s)
    return _ok(lhs, rhs)


def _root_increment_sides(a, b, s):
    lhs = np.abs(np.asarray(b, float) - np.asarray(a, float))
    rhs = (2.0 / (1.0 - s)) * np.abs(_psi_diff(a, b, s)) * np.exp(
        ((1.0 + s) / 2.0) * np.maximum(np.log1p(a), np.log1p(b)))
    return lhs, rhs


def holds_root_increment(a, b, s):
    """|b-a| <= 2/(1-s) |psi(b)-psi(a)| max((1+a),(1+b))^((1+s)/2).

    Mean-value bound inverting the concave power map psi.
    """
    lhs, rhs = _root_increment_sides(a, b, s)
    return _ok(lhs, rhs)


def holds_log_square(a, b):
    """(b-a)(1/a - 1/b) >= (log b - log a)^2 for a, b > 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lhs = (np.log(b) - np.log(a)) ** 2
    rhs = (b - a) * (1.0 / a - 1.0 / b)
    return _ok(lhs, rhs)


def _weighted_power_sides(a, b, eta1, eta2, q):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    q = np.asarray(q, dtype=float)
    rhs = (b - a) * (eta2**2 * b ** (q - 1.0) - eta1**2 * a ** (q - 1.0))
    lhs = ((q - 1.0) / (32.0 * q**2) * (eta2 * b ** (q / 2.0) - eta1 * a ** (q / 2.0)) ** 2
           - 2.0 * np.maximum(1.0, 1.0 / (q - 1.0)) * (eta2 - eta1) ** 2 * (b**q + a**q))
    return lhs, rhs


def holds_weighted_power(a, b, eta1, eta2, q):
    """Weighted power-increment bound used in energy iteration arguments.

    (b-a)(eta2^2 b^(q-1) - eta1^2 a^(q-1))
        >= (q-1)/(32 q^2) (eta2 b^(q/2) - eta1 a^(q/2))^2
           - 2 (1 v (q-1)^-1) (eta2 - eta1)^2 (b^q + a^q).
    """
    lhs, rhs = _weighted_power_sides(a, b, eta1, eta2, q)
    return _ok(lhs, rhs)


def _quadratic_split_sides(a, b, x, y):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rhs = (b - a) * (b * y**2 - a * x**2)
    lhs = 0.25 * (b - a) ** 2 * (y**2 + x**2) - 4.0 * (b**2 + a**2) * (y - x) ** 2
    return lhs, rhs


def holds_quadratic_split(a, b, x, y):
    """(b-a)(b y^2 - a x^2) >= 1/4 (b-a)^2 (y^2+x^2) - 4 (b^2+a^2)(y-x)^2.

    Follows from splitting b y^2 - a x^2 symmetrically and Young's
    inequality; valid for all real inputs.
    """
    lhs, rhs = _quadratic_split_sides(a, b, x, y)
    return _ok(lhs, rhs)


def _clamp_duality_sides(a, b, s):
    """|b-a| versus the energy route through the clamp bound."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    energy = (b - a) * _clamp_diff(a, b, s)
    lhs = np.abs(b - a)
    rhs = (2.0 / (1.0 - s)) * np.sqrt(
        np.maximum(energy, 0.0) / _clamp_prefactor(s)) * np.exp(
        ((1.0 + s) / 2.0) * np.maximum(np.log1p(a), np.log1p(b)))
    return lhs, rhs


def holds_clamp_duality(a, b, s):
    """Composite of the clamp-energy and root-increment bounds.

    Bounds |b-a| directly by the clamp increment energy:
    |b-a| <= 2/(1-s) sqrt((b-a)(Phi(b)-Phi(a)) / c(s)) max(1+a, 1+b)^((1+s)/2).
    """
    lhs, rhs = _clamp_duality_sides(a, b, s)
    return _ok(lhs, rhs)


# ---------------------------------------------------------------------------
# sampling suite
# ---------------------------------------------------------------------------

@dataclass
class InequalityResult:
    name: str
    samples: int
    violations: int
    worst_deficit: float  # max(lhs - rhs), negative when slack everywhere
    worst_args: tuple


def _magnitudes(rng, n):
    """Log-uniform over [1e-6, 1e6], the range where constants degenerate."""
    return np.exp(rng.uniform(np.log(1e-6), np.log(1e6), n))


def _unit_interval_dense_edges(rng, n, lo_exp=-3.0):
    """Uniform draws mixed with mass concentrated near 0 and 1.

    The low edge stops at 10^lo_exp where callers need 2^(1/s) to stay
    inside the double range.
    """
    u = rng.uniform(0.0, 1.0, n)
    edge = 10.0 ** rng.uniform(lo_exp, -0.31, n)
    hi = 1.0 - 10.0 ** rng.uniform(-8.0, -0.31, n)
    pick = rng.integers(0, 3, n)
    out = np.where(pick == 0, u, np.where(pick == 1, edge, hi))
    return np.clip(out, 10.0**lo_exp, 1.0 - 1e-12)


def run_inequality_suite(n: int, seed: int = 0):
    """Evaluate every predicate on n fixed-seed samples; returns results."""
    rng = np.random.default_rng(seed)
    results = []

    def record(name, lhs, rhs, args):
        deficit = np.asarray(lhs - rhs)
        tol = DEFICIT_TOL * (1.0 + np.abs(rhs))
        bad = deficit > tol
        k = int(np.argmax(deficit - tol)) if deficit.size else 0
        worst = tuple(float(np.asarray(arg).ravel()[k]) for arg in args) if n else ()
        results.append(InequalityResult(
            name=name, samples=int(deficit.size), violations=int(np.count_nonzero(bad)),
            worst_deficit=float(deficit.max()) if n else 0.0, worst_args=worst))

    if n == 0:
        return results

    a = _magnitudes(rng, n)
    b = _magnitudes(rng, n)
    s = _unit_interval_dense_edges(rng, n)
    lhs, rhs = lhs_rhs_clamp_energy(a, b, s)
    record("clamp_energy", lhs, rhs, (a, b, s))

    a2, b2 = _magnitudes(rng, n), _magnitudes(rng, n)
    s2 = _unit_interval_dense_edges(rng, n)
    lhs, rhs = _root_increment_sides(a2, b2, s2)
    record("root_increment", lhs, rhs, (a2, b2, s2))

    a3, b3 = _magnitudes(rng, n), _magnitudes(rng, n)
    lhs = (np.log(b3) - np.log(a3)) ** 2
    rhs = (b3 - a3) * (1.0 / a3 - 1.0 / b3)
    record("log_square", lhs, rhs, (a3, b3))

    a4, b4 = _magnitudes(rng, n), _magnitudes(rng, n)
    e1, e2 = rng.uniform(0.0, 3.0, n), rng.uniform(0.0, 3.0, n)
    q = 1.0 + 9.0 * _unit_interval_dense_edges(rng, n, lo_exp=-8.0)
    lhs, rhs = _weighted_power_sides(a4, b4, e1, e2, q)
    record("weighted_power", lhs, rhs, (a4, b4, e1, e2, q))

    a5, b5, x5, y5 = (rng.uniform(-10.0, 10.0, n) for _ in range(4))
    lhs, rhs = _quadratic_split_sides(a5, b5, x5, y5)
    record("quadratic_split", lhs, rhs, (a5, b5, x5, y5))

    # composite duality on shared samples of the clamp-energy draw
    lhs, rhs = _clamp_duality_sides(a, b, s)
    record("clamp_duality", lhs, rhs, (a, b, s))

    return results
