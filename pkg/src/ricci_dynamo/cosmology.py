"""Cosmological regime classification on 2D spatial sections.

The matter sector enters through the curvature relation R = rho + theta.
Regimes are decided from the ideal-limit real part (1/2)(-3 R + rho) and
the degeneracy indicator 11 rho - 8 R, with a deterministic precedence on
the boundary cases:

    degenerate eigenvalues  >  static (theta = 0, R = rho)  >  fast  >  decay.

R and Lambda are kept as distinct fields: on a constant-curvature surface
Ric = Lambda g ties them together, but the identification depends on the
trace convention, so it is only enforced by the explicit
`with_einstein_condition` constructor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NegativeDensity
from .geometry import Metric2, RicciData, ricci_eigen, ricci_flow_evolve
from .operator import ReducedOperator
from .spectrum import density_discriminant, ideal_real_part

__all__ = [
    "CosmologicalState",
    "Regime",
    "DynamoBound",
    "REGIME_CODES",
    "FAST_DYNAMO",
    "DECAY",
    "MARGINAL_EINSTEIN_STATIC",
    "DEGENERATE_EIGENVALUES",
    "curvature_from_matter",
    "classify",
    "desitter_metric",
    "desitter_spatial",
    "dynamo_bound",
    "contraction_supports_dynamo",
    "desitter_reduced_operator",
    "curvature_flow_history",
]

FAST_DYNAMO = "FastDynamo"
DECAY = "Decay"
MARGINAL_EINSTEIN_STATIC = "MarginalEinsteinStatic"
DEGENERATE_EIGENVALUES = "DegenerateEigenvalues"

REGIME_CODES = {
    DECAY: 0,
    FAST_DYNAMO: 1,
    MARGINAL_EINSTEIN_STATIC: 2,
    DEGENERATE_EIGENVALUES: 3,
}

_GROWTH_TOL = 1e-9
_BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class CosmologicalState:
    """Matter density, expansion, curvature trace, and optional Lambda."""

    rho: float
    theta: float
    ricci: float
    lam: Optional[float] = None

    def __post_init__(self):
        if self.rho < 0.0:
            raise NegativeDensity(f"matter density must be non-negative, got {self.rho}")

    @classmethod
    def with_einstein_condition(cls, rho: float, theta: float, lam: float) -> "CosmologicalState":
        """State on a constant-curvature section: the curvature trace is Lambda."""
        return cls(rho=rho, theta=theta, ricci=lam, lam=lam)


def curvature_from_matter(rho: float, theta: float) -> CosmologicalState:
    """State with the curvature relation R = rho + theta applied."""
    if rho < 0.0:
        raise NegativeDensity(f"matter density must be non-negative, got {rho}")
    return CosmologicalState(rho=rho, theta=theta, ricci=rho + theta)


@dataclass(frozen=True)
class Regime:
    """Classification label with the numbers that decided it."""

    label: str
    real_part: float
    discriminant: float
    theta: float

    @property
    def code(self) -> int:
        return REGIME_CODES[self.label]


def classify(state: CosmologicalState) -> Regime:
    """Dynamo regime of a cosmological state.

    Precedence: a vanishing discriminant wins (degenerate eigenvalues are
    excluded observationally, so they are surfaced first), then the static
    case theta = 0 with R = rho, then positive ideal-limit growth, else
    decay (which is exactly the bound rho <= 3 R).
    """
    re = ideal_real_part(state.ricci, state.rho)
    disc = density_discriminant(state.rho, state.ricci)
    scale = max(1.0, abs(state.rho), abs(state.ricci), abs(state.theta))
    if disc.degenerate:
        label = DEGENERATE_EIGENVALUES
    elif (abs(state.theta) <= _BOUNDARY_RTOL * scale
          and abs(state.ricci - state.rho) <= _BOUNDARY_RTOL * scale):
        label = MARGINAL_EINSTEIN_STATIC
    elif re > _GROWTH_TOL:
        label = FAST_DYNAMO
    else:
        label = DECAY
    return Regime(label=label, real_part=re, discriminant=disc.value, theta=state.theta)


def desitter_metric(lam: float, t: float) -> np.ndarray:
    """Spacetime components diag(-1, exp(Lambda t), exp(Lambda t))."""
    s = math.exp(lam * t)
    return np.diag([-1.0, s, s])


def desitter_spatial(lam: float, t: float) -> Metric2:
    """Spatial block of the expanding metric as a Metric2."""
    return Metric2.conformal(math.exp(lam * t), t)


@dataclass(frozen=True)
class DynamoBound:
    """Sign analysis of the field growth exponent 2 Lambda - theta."""

    growth: float
    supports_fast_dynamo: bool
    marginal: bool


def dynamo_bound(lam: float, theta: float) -> DynamoBound:
    """Growth exponent 2 Lambda - theta: positive iff Lambda > theta / 2."""
    growth = 2.0 * lam - theta
    return DynamoBound(
        growth=growth,
        supports_fast_dynamo=growth > 0.0,
        marginal=abs(growth) <= 1e-12,
    )


def contraction_supports_dynamo(state: CosmologicalState) -> bool:
    """Whether a matter-built state supports fast growth.

    Requires a state from `curvature_from_matter` (R = rho + theta).  With
    that relation the growth condition re > 0 is algebraically equivalent
    to -3 theta > 2 rho: positive density demands a contracting phase.
    Returns True exactly when the classifier reports fast growth.
    """
    scale = max(1.0, abs(state.rho), abs(state.theta))
    if abs(state.ricci - (state.rho + state.theta)) > 1e-12 * scale:
        raise ValueError("state must satisfy the curvature relation R = rho + theta")
    regime = classify(state)
    supports = regime.label == FAST_DYNAMO
    contraction = -3.0 * state.theta > 2.0 * state.rho
    grows = regime.real_part > _GROWTH_TOL
    if grows != contraction:
        raise AssertionError(
            "growth sign and contraction inequality disagree; curvature relation violated"
        )
    return supports


def desitter_reduced_operator(lam: float, theta: float) -> ReducedOperator:
    """Reduced generator (2 Lambda - theta) * I of the expanding growth law.

    Its semigroup is exactly the amplification exp((2 Lambda - theta) t)
    applied to both components, which is the model the energy growth rate
    2 (2 Lambda - theta) refers to.
    """
    return ReducedOperator((2.0 * lam - theta) * np.eye(2))


def curvature_flow_history(r0: float, t_end: float, n_steps: int):
    """Curvature eigenvalue along the flow of a constant-curvature metric.

    The Ricci tensor of a uniformly scaled 2D metric is unchanged, so the
    flow shrinks (r0 > 0) or grows (r0 < 0) the metric against a fixed
    tensor r0 * identity; the eigenvalue r0 / (1 - 2 r0 t) keeps its sign
    for as long as the metric stays positive-definite.  Returns (times,
    eigenvalues) arrays.
    """
    ric = RicciData(r0 * np.eye(2))
    history = ricci_flow_evolve(Metric2.identity(), lambda m: ric, t_end, n_steps)
    times = np.array([m.t for m in history])
    lams = np.array([max(val for val, _ in ricci_eigen(ric, m)) for m in history])
    return times, lams
