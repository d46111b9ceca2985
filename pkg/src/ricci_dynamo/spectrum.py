"""Growth-rate spectra of the induction operator by several routes.

The authoritative route solves the characteristic quadratic

    lam^2 + b lam + c = 0,
    b = 2 (R + theta/2 - eta),
    c = R^2 + theta^2 + 2 (eta - theta) R,

which is exactly the trace/determinant data of the reduced operator.  A
second family evaluates the closed-form expressions printed for the same
problem; their radicands do not match the quadratic's discriminant, so the
two routes genuinely disagree, and `discrepancy_report` quantifies the gap
instead of hiding it.  Numerical eigensolvers on the assembled operators
provide the independent cross-check for the quadratic.

All complex square roots take the principal branch, and both signs of
every +/- radical are returned as separate roots.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DivisionByZero, NoConvergence, NonConvergent
from .operator import GridOperator, ReducedOperator, assemble_reduced

__all__ = [
    "EigenPair",
    "SpectrumResult",
    "DiscriminantResult",
    "FastDynamoVerdict",
    "PairComparison",
    "DiscrepancyReport",
    "quadratic_roots",
    "closed_form_roots",
    "diffusion_free_roots",
    "cosmological_roots",
    "ideal_real_part",
    "chicone_latushkin",
    "fast_dynamo_test",
    "density_discriminant",
    "numerical_spectrum",
    "discrepancy_report",
]

_DOUBLE_ROOT_RTOL = 1e-12
_AGREEMENT_TOL = 1e-10
FAST_DYNAMO_TOLERANCE = 1e-9


@dataclass(frozen=True)
class EigenPair:
    value: complex
    multiplicity: int = 1


@dataclass(frozen=True)
class SpectrumResult:
    """Roots of one eigenvalue route, with residuals against the quadratic.

    `residuals` holds |lam^2 + b lam + c| per root when the (b, c)
    coefficients are known for the inputs, None otherwise (grid route,
    curvature-only comparison formulas).
    """

    roots: tuple[EigenPair, ...]
    source: str
    residuals: Optional[tuple[float, ...]] = None
    cosmological_real_part: Optional[float] = None

    @property
    def max_real_part(self) -> float:
        return max(p.value.real for p in self.roots)

    def values(self) -> list[complex]:
        """Roots expanded with multiplicity."""
        out = []
        for p in self.roots:
            out.extend([p.value] * p.multiplicity)
        return out


def characteristic_coefficients(ricci: float, theta: float, eta: float) -> tuple[float, float]:
    """(b, c) of the characteristic quadratic lam^2 + b lam + c = 0."""
    b = 2.0 * (ricci + theta / 2.0 - eta)
    c = ricci * ricci + theta * theta + 2.0 * (eta - theta) * ricci
    return b, c


def _solve_quadratic(b: float, c: float) -> tuple[complex, complex]:
    # Sign-matched branch: q = -(b + sign(b) sqrt(d))/2 avoids cancellation,
    # the second root follows from the product c = r1 r2.
    disc = b * b - 4.0 * c
    if disc >= 0.0:
        s = cmath.sqrt(disc).real
        q = -0.5 * (b + (s if b >= 0.0 else -s))
        if q == 0.0:
            return complex(0.0), complex(-b)
        return complex(q), complex(c / q)
    imag = 0.5 * cmath.sqrt(-disc).real
    re = -0.5 * b
    return complex(re, imag), complex(re, -imag)


def _residual(lam: complex, b: float, c: float) -> float:
    return abs(lam * lam + b * lam + c)


def _merge_roots(values: Sequence[complex]) -> tuple[EigenPair, ...]:
    if len(values) == 2:
        a, b = values
        scale = 1.0 + abs(a) + abs(b)
        if abs(a - b) <= _DOUBLE_ROOT_RTOL * scale:
            return (EigenPair(a, 2),)
    return tuple(EigenPair(v, 1) for v in values)


def quadratic_roots(ricci: float, theta: float, eta: float) -> SpectrumResult:
    """Both roots of the characteristic quadratic, numerically stable."""
    b, c = characteristic_coefficients(ricci, theta, eta)
    r1, r2 = _solve_quadratic(b, c)
    pairs = _merge_roots([r1, r2])
    return SpectrumResult(
        roots=pairs,
        source="characteristic",
        residuals=tuple(_residual(p.value, b, c) for p in pairs),
    )


def closed_form_roots(ricci: float, theta: float, eta: float) -> SpectrumResult:
    """Literal evaluation of the printed closed-form growth rates.

    lam = -(R + theta/2 - eta)
          +/- sqrt(-(3/4) theta^2 + eta theta (1 - R/theta)
                   - (3/4) theta^2 (1 + R/theta) - eta^2)

    The radicand differs from the characteristic quadratic's discriminant;
    residuals are reported against the quadratic so the gap is visible.
    """
    if theta == 0.0:
        raise DivisionByZero("closed-form growth rate contains R/theta; theta must be nonzero")
    lin = -(ricci + theta / 2.0 - eta)
    rad = (
        -0.75 * theta * theta
        + eta * theta * (1.0 - ricci / theta)
        - 0.75 * theta * theta * (1.0 + ricci / theta)
        - eta * eta
    )
    s = cmath.sqrt(complex(rad, 0.0))
    pairs = _merge_roots([lin + s, lin - s])
    b, c = characteristic_coefficients(ricci, theta, eta)
    return SpectrumResult(
        roots=pairs,
        source="closed_form",
        residuals=tuple(_residual(p.value, b, c) for p in pairs),
    )


def diffusion_free_roots(ricci: float, theta: float) -> SpectrumResult:
    """Closed-form growth rates in the ideal (eta = 0) limit.

    Definitionally the same expression as `closed_form_roots` at eta = 0;
    the shared code path keeps the two exactly equal.
    """
    base = closed_form_roots(ricci, theta, 0.0)
    return SpectrumResult(roots=base.roots, source="diffusion_free",
                          residuals=base.residuals)


def cosmological_roots(ricci: float, rho: float, eta: float) -> SpectrumResult:
    """Growth rates with the curvature-matter relation substituted in.

    lam = (1/2) [(-3 R + rho + 2 eta)
                 +/- i sqrt(7 rho^2 + 4 rho^2 (1 - 2 R/rho) + 4 eta^2)]

    evaluated literally (a negative radicand turns the i*sqrt factor real).
    `cosmological_real_part` carries (1/2)(-3 R + rho), the ideal-limit
    real part used by the regime classifier.
    """
    if rho == 0.0:
        raise DivisionByZero("cosmological growth rate contains R/rho; rho must be nonzero")
    lin = -3.0 * ricci + rho + 2.0 * eta
    rad = 7.0 * rho * rho + 4.0 * rho * rho * (1.0 - 2.0 * ricci / rho) + 4.0 * eta * eta
    s = 1j * cmath.sqrt(complex(rad, 0.0))
    pairs = _merge_roots([0.5 * (lin + s), 0.5 * (lin - s)])
    return SpectrumResult(
        roots=pairs,
        source="cosmological",
        residuals=None,
        cosmological_real_part=ideal_real_part(ricci, rho),
    )


def ideal_real_part(ricci: float, rho: float) -> float:
    """Ideal-limit real part (1/2)(-3 R + rho) of the cosmological route."""
    return 0.5 * (-3.0 * ricci + rho)


def chicone_latushkin(kappa: float, eta: float) -> SpectrumResult:
    """Comparison growth rates for geodesic flow on a surface of curvature kappa.

    lam = (1/2) [-eta (1 + kappa^2) + sqrt(-4 kappa + eta (1 - kappa^2))],

    returned with both square-root branches, the printed (+) branch first.
    At eta = 0 the first root is (1/2) sqrt(-4 kappa): real and positive on
    negative curvature.
    """
    lin = -eta * (1.0 + kappa * kappa)
    s = cmath.sqrt(complex(-4.0 * kappa + eta * (1.0 - kappa * kappa), 0.0))
    pairs = _merge_roots([0.5 * (lin + s), 0.5 * (lin - s)])
    return SpectrumResult(roots=pairs, source="chicone_latushkin", residuals=None)


@dataclass(frozen=True)
class FastDynamoVerdict:
    is_fast: bool
    limit: float
    extrapolants: tuple[float, ...]
    tolerance: float = FAST_DYNAMO_TOLERANCE


def _aitken(f0: float, f1: float, f2: float) -> float:
    # Delta-squared acceleration; exact for geometrically decaying error,
    # which is what a geometric eta sequence produces.
    d1_ = f1 - f0
    d2_ = f2 - f1
    denom = d2_ - d1_
    if abs(denom) <= 1e-300 or abs(denom) <= 1e-14 * (abs(d1_) + abs(d2_)):
        return f2
    return f2 - d2_ * d2_ / denom


def fast_dynamo_test(spectrum_fn: Callable[[float], "SpectrumResult"],
                     eta_sequence: Sequence[float]) -> FastDynamoVerdict:
    """Extrapolate max Re(lam) to the eta -> 0 limit and test positivity.

    `eta_sequence` must be strictly decreasing, positive, and have at least
    three entries.  Each consecutive triple yields one extrapolant; the test
    is positive when the last extrapolant exceeds 1e-9.  Raises
    NonConvergent when two successive extrapolants differ by more than 10 %
    of their magnitude.
    """
    etas = [float(e) for e in eta_sequence]
    if len(etas) < 3:
        raise ValueError("need at least three eta samples")
    if any(e <= 0.0 for e in etas):
        raise ValueError("eta samples must be positive")
    if any(b >= a for a, b in zip(etas, etas[1:])):
        raise ValueError("eta samples must be strictly decreasing")

    rates = [spectrum_fn(e).max_real_part for e in etas]
    extrapolants = [
        _aitken(rates[j], rates[j + 1], rates[j + 2])
        for j in range(len(rates) - 2)
    ]
    for prev, cur in zip(extrapolants, extrapolants[1:]):
        scale = max(abs(prev), abs(cur))
        if scale > 1e-12 and abs(cur - prev) > 0.1 * scale:
            raise NonConvergent(
                f"extrapolants {prev:.6g} and {cur:.6g} differ by more than 10%"
            )
    limit = extrapolants[-1]
    return FastDynamoVerdict(is_fast=limit > FAST_DYNAMO_TOLERANCE,
                             limit=limit, extrapolants=tuple(extrapolants))


@dataclass(frozen=True)
class DiscriminantResult:
    value: float
    degenerate: bool


def density_discriminant(rho: float, ricci: float) -> DiscriminantResult:
    """Degeneracy indicator 11 rho - 8 R of the cosmological quadratic.

    Flagged degenerate when |Delta| <= 1e-12 * max(|11 rho|, |8 R|, 1); on
    the degeneracy locus rho / R = 8/11 = 0.7272...
    """
    value = 11.0 * rho - 8.0 * ricci
    scale = max(abs(11.0 * rho), abs(8.0 * ricci), 1.0)
    return DiscriminantResult(value=value, degenerate=abs(value) <= 1e-12 * scale)


# -- numerical routes --------------------------------------------------------

def numerical_spectrum(op, k: int = 2, seed: int = 0, tol: float = 1e-8,
                       max_iterations: int = 10_000) -> SpectrumResult:
    """Leading-k eigenvalues of an assembled operator, descending by real part.

    Reduced operators are solved exactly.  Grid operators use subspace
    iteration on the short-time propagator with a Rayleigh-Ritz projection
    of the operator itself; results are reproducible for a fixed seed.
    Raises NoConvergence when the Ritz values have not settled within
    `max_iterations` outer iterations.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if isinstance(op, ReducedOperator):
        return _reduced_spectrum(op)
    if isinstance(op, GridOperator):
        if k > 10:
            raise ValueError("grid spectra are limited to k <= 10")
        return _grid_spectrum(op, k, seed, tol, max_iterations)
    raise TypeError(f"unsupported operator type {type(op).__name__}")


def _sort_desc(values):
    return sorted(values, key=lambda z: (-z.real, -z.imag))


def _reduced_spectrum(op: ReducedOperator) -> SpectrumResult:
    vals = _sort_desc([complex(v) for v in np.linalg.eigvals(op.matrix)])
    pairs = _merge_roots(vals)
    # trace/determinant give the operator's own quadratic coefficients
    b, c = -op.trace, op.determinant
    return SpectrumResult(
        roots=pairs,
        source="numerical_reduced",
        residuals=tuple(_residual(p.value, b, c) for p in pairs),
    )


def _grid_spectrum(op: GridOperator, k, seed, tol, max_iterations):
    if op.eta == 0.0 and op._v_zero:
        # zero operator: spectrum is identically zero
        return SpectrumResult(roots=(EigenPair(0j, 2),), source="numerical_grid",
                              residuals=None)
    n_dof = op.size
    m = min(n_dof, max(2 * k + 4, 12))
    rng = np.random.default_rng(seed)
    block = rng.standard_normal((m, 2, op.n, op.n))

    tau = 1.0
    dt = op.stable_step(tau)
    steps = max(1, int(np.ceil(tau / dt)))
    dt = tau / steps

    def orthonormalize(blk):
        flat = blk.reshape(m, n_dof).T
        q, _ = np.linalg.qr(flat)
        return q.T.reshape(m, 2, op.n, op.n)

    block = orthonormalize(block)
    prev = None
    for _ in range(max_iterations):
        for _ in range(steps):
            k1 = op.apply_block(block)
            k2 = op.apply_block(block + 0.5 * dt * k1)
            k3 = op.apply_block(block + 0.5 * dt * k2)
            k4 = op.apply_block(block + dt * k3)
            block = block + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        block = orthonormalize(block)
        image = op.apply_block(block)
        hmat = block.reshape(m, n_dof) @ image.reshape(m, n_dof).T
        ritz = _sort_desc([complex(v) for v in np.linalg.eigvals(hmat)])[:k]
        if prev is not None:
            scale = 1.0 + max(abs(v) for v in ritz)
            if max(abs(a - b) for a, b in zip(ritz, prev)) <= tol * scale:
                return SpectrumResult(roots=tuple(EigenPair(v, 1) for v in ritz),
                                      source="numerical_grid", residuals=None)
        prev = ritz
    raise NoConvergence(
        f"grid spectrum did not settle to {tol:g} within {max_iterations} iterations"
    )


# -- cross-route comparison ---------------------------------------------------

@dataclass(frozen=True)
class PairComparison:
    source_a: str
    source_b: str
    differences: tuple[complex, ...]
    agrees: bool


@dataclass(frozen=True)
class DiscrepancyReport:
    """Pairwise root differences between eigenvalue routes at one input."""

    ricci: float
    theta: float
    eta: float
    pairs: tuple[PairComparison, ...] = field(default_factory=tuple)

    def comparison(self, source_a: str, source_b: str) -> PairComparison:
        for p in self.pairs:
            if (p.source_a, p.source_b) == (source_a, source_b):
                return p
            if (p.source_a, p.source_b) == (source_b, source_a):
                return PairComparison(source_a, source_b,
                                      tuple(-d for d in p.differences), p.agrees)
        raise KeyError(f"no comparison between {source_a!r} and {source_b!r}")


def match_roots(a: Sequence[complex], b: Sequence[complex]) -> list[complex]:
    """Differences a_i - b_(perm(i)) under the pairing of least total distance."""
    a = list(a)
    b = list(b)
    if len(a) != 2 or len(b) != 2:
        raise ValueError("root matching expects two roots per route")
    straight = abs(a[0] - b[0]) + abs(a[1] - b[1])
    crossed = abs(a[0] - b[1]) + abs(a[1] - b[0])
    if crossed < straight:
        b = [b[1], b[0]]
    return [a[0] - b[0], a[1] - b[1]]


def discrepancy_report(ricci: float, theta: float, eta: float) -> DiscrepancyReport:
    """Compare the quadratic, closed-form, and numerical routes at one input.

    Roots are paired by least total distance; a pair of routes agrees when
    the worst matched difference is below 1e-10 * (1 + largest root).
    """
    routes = {
        "characteristic": quadratic_roots(ricci, theta, eta),
        "closed_form": closed_form_roots(ricci, theta, eta),
        "numerical_reduced": _reduced_spectrum(assemble_reduced(ricci, theta, eta)),
    }
    names = list(routes)
    pairs = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            va = routes[names[i]].values()
            vb = routes[names[j]].values()
            diffs = match_roots(va, vb)
            scale = 1.0 + max(abs(z) for z in va + vb)
            agrees = max(abs(d) for d in diffs) <= _AGREEMENT_TOL * scale
            pairs.append(PairComparison(names[i], names[j], tuple(diffs), agrees))
    return DiscrepancyReport(ricci=ricci, theta=theta, eta=eta, pairs=tuple(pairs))
