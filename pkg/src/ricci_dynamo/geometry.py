"""2D Riemannian metrics, their flow by curvature, and flow-gradient kinematics.

Conventions used throughout:

 - metrics are 2x2 symmetric positive-definite matrices on a single chart;
 - the flow of a metric is d(g)/dt = -2 Ric, stepped explicitly;
 - on a constant-curvature (Einstein) surface, Ric = lam * g and the flow
   has the closed form g(t) = exp(-2 lam t) * identity, which serves as the
   exact oracle for the Euler integrator;
 - connection coefficients follow the index placement
   Gamma^i_jk = g^il (d_j g_kl + d_k g_jl - d_l g_jk) *without* the
   conventional 1/2 prefactor; `christoffel_standard` applies the 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateMetric, InsufficientSamples

__all__ = [
    "Metric2",
    "RicciData",
    "EhlersSachs",
    "Connection",
    "ricci_flow_step",
    "ricci_flow_evolve",
    "einstein_flow_history",
    "exact_flow_metric",
    "ricci_eigen",
    "lyapunov_from_metric",
    "christoffel",
    "christoffel_standard",
    "ricci_rotation_conformal",
    "decompose_gradient",
    "flow_divergence",
]


def _as_sym22(a, what):
    m = np.array(a, dtype=float)
    if m.shape != (2, 2):
        raise ValueError(f"{what} must be a 2x2 matrix, got shape {m.shape}")
    if m[0, 1] != m[1, 0]:
        raise ValueError(f"{what} must be exactly symmetric")
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class Metric2:
    """A 2x2 symmetric positive-definite metric at flow parameter `t`."""

    g: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        m = _as_sym22(self.g, "metric")
        if m[0, 0] <= 0.0 or np.linalg.det(m) <= 0.0:
            raise DegenerateMetric(
                f"metric is not positive-definite: g11={m[0, 0]}, det={np.linalg.det(m)}"
            )
        object.__setattr__(self, "g", m)

    @classmethod
    def identity(cls, t: float = 0.0) -> "Metric2":
        return cls(np.eye(2), t)

    @classmethod
    def conformal(cls, scale: float, t: float = 0.0) -> "Metric2":
        """Metric scale * delta_ij."""
        return cls(scale * np.eye(2), t)

    @property
    def det(self) -> float:
        return float(self.g[0, 0] * self.g[1, 1] - self.g[0, 1] * self.g[1, 0])

    @property
    def inverse(self) -> np.ndarray:
        d = self.det
        inv = np.array([[self.g[1, 1], -self.g[0, 1]], [-self.g[1, 0], self.g[0, 0]]]) / d
        inv.setflags(write=False)
        return inv

    @property
    def volume_element(self) -> float:
        """sqrt(det g), the area weight of the volume form."""
        return math.sqrt(self.det)

    def eigenvalues(self) -> np.ndarray:
        """Metric eigenvalues in ascending order."""
        return np.linalg.eigvalsh(self.g)


@dataclass(frozen=True)
class RicciData:
    """Ricci tensor components on the chart (symmetric 2x2)."""

    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", _as_sym22(self.components, "Ricci tensor"))

    @classmethod
    def zero(cls) -> "RicciData":
        return cls(np.zeros((2, 2)))

    @classmethod
    def einstein(cls, lam: float, metric: Metric2) -> "RicciData":
        """Ric = lam * g, the constant-curvature condition."""
        return cls(lam * metric.g)

    @property
    def scalar(self) -> float:
        """Common diagonal value when the tensor is a multiple of the identity.

        Only meaningful in coordinates where R11 = R22 and R12 = 0; raises
        otherwise.
        """
        r = self.components
        scale = max(1.0, abs(r[0, 0]), abs(r[1, 1]))
        if abs(r[0, 1]) > 1e-12 * scale or abs(r[0, 0] - r[1, 1]) > 1e-12 * scale:
            raise ValueError("Ricci tensor is not proportional to the identity")
        return float(r[0, 0])


@dataclass(frozen=True)
class Connection:
    """Coordinate and frame connection coefficients.

    `christoffel[i, j, k]` is Gamma^i_jk (symmetric in j, k);
    `ricci_rotation[l, j, k]` is the frame coefficient gamma^l_jk from
    d_j e_k = gamma^l_jk e_l.
    """

    christoffel: np.ndarray
    ricci_rotation: np.ndarray = field(default_factory=lambda: np.zeros((2, 2, 2)))

    def __post_init__(self):
        gam = np.array(self.christoffel, dtype=float)
        rot = np.array(self.ricci_rotation, dtype=float)
        if gam.shape != (2, 2, 2) or rot.shape != (2, 2, 2):
            raise ValueError("connection coefficients must have shape (2, 2, 2)")
        if not np.array_equal(gam, np.swapaxes(gam, 1, 2)):
            raise ValueError("christoffel coefficients must be symmetric in the lower indices")
        gam.setflags(write=False)
        rot.setflags(write=False)
        object.__setattr__(self, "christoffel", gam)
        object.__setattr__(self, "ricci_rotation", rot)

    @classmethod
    def flat(cls) -> "Connection":
        return cls(np.zeros((2, 2, 2)), np.zeros((2, 2, 2)))


@dataclass(frozen=True)
class EhlersSachs:
    """Kinematic split of a flow gradient.

    `shear` is the symmetric part with vanishing g-trace; `shear_trace` is
    the scalar trace sigma carried separately (zero for decompositions
    produced by `decompose_gradient`, free when constructed directly).
    """

    vorticity: np.ndarray
    shear: np.ndarray
    shear_trace: float
    expansion: float
    acceleration: np.ndarray

    def reconstruct(self, g: Metric2, v: np.ndarray) -> np.ndarray:
        """Rebuild the gradient: Omega + sigma_pl - (1/3) theta g - A (x) v."""
        full_shear = self.shear + 0.5 * self.shear_trace * g.g
        return (
            self.vorticity
            + full_shear
            - (self.expansion / 3.0) * g.g
            - np.outer(self.acceleration, np.asarray(v, dtype=float))
        )


def ricci_flow_step(g: Metric2, ric: RicciData, dt: float) -> Metric2:
    """One explicit Euler step of d(g)/dt = -2 Ric.

    Raises DegenerateMetric when the stepped metric loses positive-
    definiteness (the step was too large for the curvature).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return Metric2(g.g - 2.0 * ric.components * dt, g.t + dt)


def ricci_flow_evolve(g0: Metric2, ric_of, t_end: float, n_steps: int) -> list[Metric2]:
    """Evolve a metric by Euler steps, returning the full history.

    `ric_of` maps the current Metric2 to the RicciData driving the next step.
    A step that degenerates the metric is retried with halved sub-steps
    (up to 20 halvings) before giving up.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    dt = t_end / n_steps
    history = [g0]
    g = g0
    for _ in range(n_steps):
        g = _step_with_halving(g, ric_of, dt, depth=0)
        history.append(g)
    return history


def _step_with_halving(g, ric_of, dt, depth):
    try:
        return ricci_flow_step(g, ric_of(g), dt)
    except DegenerateMetric:
        if depth >= 20:
            raise
        half = _step_with_halving(g, ric_of, dt / 2.0, depth + 1)
        return _step_with_halving(half, ric_of, dt / 2.0, depth + 1)


def einstein_flow_history(lam: float, t_end: float, n_steps: int,
                          g0: Metric2 | None = None) -> list[Metric2]:
    """Euler history of the constant-curvature flow with Ric = lam * g(t).

    Converges at first order to `exact_flow_metric(lam, t)`.
    """
    start = Metric2.identity() if g0 is None else g0
    return ricci_flow_evolve(start, lambda m: RicciData.einstein(lam, m), t_end, n_steps)


def exact_flow_metric(lam: float, t: float) -> Metric2:
    """Closed-form constant-curvature flow metric exp(-2 lam t) * identity."""
    return Metric2(math.exp(-2.0 * lam * t) * np.eye(2), t)


def ricci_eigen(ric: RicciData, g: Metric2) -> list[tuple[float, np.ndarray]]:
    """Generalized eigenpairs of R_ij chi^j = lam g_ij chi^j.

    Returns [(eigenvalue, eigendirection), ...] in ascending eigenvalue
    order, eigendirections normalized to unit g-norm.
    """
    vals, vecs = scipy.linalg.eigh(ric.components, g.g)
    return [(float(vals[i]), vecs[:, i].copy()) for i in range(2)]


def lyapunov_from_metric(g_history) -> list[float]:
    """Finite-time exponents from a metric history.

    For each metric eigenvalue branch the exponent is
    -log(L_i(t_end) / L_i(t_start)) / (2 (t_end - t_start)); on histories of
    `exact_flow_metric(lam, .)` this recovers lam for both branches.
    """
    history = list(g_history)
    if len(history) < 2:
        raise InsufficientSamples("need at least two metric samples")
    first, last = history[0], history[-1]
    dt = last.t - first.t
    if dt <= 0.0:
        raise ValueError("history times must increase")
    lam0 = first.eigenvalues()
    lam1 = last.eigenvalues()
    return [float(-math.log(lam1[i] / lam0[i]) / (2.0 * dt)) for i in range(2)]


def christoffel(g: Metric2, dg: np.ndarray) -> Connection:
    """Connection coefficients g^il (d_j g_kl + d_k g_jl - d_l g_jk).

    `dg[k, i, j]` holds the partial derivative d_k g_ij.  Note there is no
    1/2 prefactor here; `christoffel_standard` provides the textbook
    normalization, which is the one a grid Laplacian needs.
    """
    return Connection(_christoffel_array(g, dg))


def christoffel_standard(g: Metric2, dg: np.ndarray) -> Connection:
    """Textbook connection coefficients (with the 1/2 prefactor)."""
    return Connection(0.5 * _christoffel_array(g, dg))


def _christoffel_array(g, dg):
    dg = np.asarray(dg, dtype=float)
    if dg.shape != (2, 2, 2):
        raise ValueError("dg must have shape (2, 2, 2) with dg[k, i, j] = d_k g_ij")
    ginv = g.inverse
    gamma = np.zeros((2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                gamma[i, j, k] = sum(
                    ginv[i, l] * (dg[j, k, l] + dg[k, j, l] - dg[l, j, k])
                    for l in range(2)
                )
    return gamma


def ricci_rotation_conformal(grad_phi) -> np.ndarray:
    """Frame coefficients of the orthonormal frame of exp(2 phi) * delta.

    With e_k = exp(-phi) d_k one has d_j e_k = -(d_j phi) e_k, so
    gamma^l_jk = -(d_j phi) delta^l_k; zero for a flat (constant phi) metric.
    """
    dphi = np.asarray(grad_phi, dtype=float)
    if dphi.shape != (2,):
        raise ValueError("grad_phi must be a 2-vector")
    rot = np.zeros((2, 2, 2))
    for j in range(2):
        for k in range(2):
            rot[k, j, k] = -dphi[j]
    return rot


def decompose_gradient(grad_v, g: Metric2, v, acceleration=None) -> EhlersSachs:
    """Split a flow gradient into vorticity, shear, and expansion parts.

    The split of grad_v[p, l] = nabla_p v_l is

        Omega_pl + sigma_pl - (1/3) theta g_lp - A_p v_l

    with Omega antisymmetric and sigma symmetric and g-traceless.  The
    acceleration A is an explicit input (defaults to zero): without fixing
    it the split is not unique.  The 1/3 weight makes theta absorb 3/2 of
    the g-trace of the symmetric part, so reconstruction is exact.
    """
    m = np.asarray(grad_v, dtype=float)
    if m.shape != (2, 2):
        raise ValueError("grad_v must be 2x2")
    v = np.asarray(v, dtype=float)
    a = np.zeros(2) if acceleration is None else np.asarray(acceleration, dtype=float)

    core = m + np.outer(a, v)
    omega = 0.5 * (core - core.T)
    sym = 0.5 * (core + core.T)
    ginv = g.inverse
    trace = float(np.tensordot(ginv, sym))
    theta = -1.5 * trace
    shear = sym + (theta / 3.0) * g.g
    return EhlersSachs(
        vorticity=omega,
        shear=shear,
        shear_trace=0.0,
        expansion=theta,
        acceleration=a,
    )


def flow_divergence(es: EhlersSachs) -> float:
    """Divergence of the flow from its kinematic scalars: sigma - theta."""
    return es.shear_trace - es.expansion
