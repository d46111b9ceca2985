"""The induction operator in its two realizations.

Reduced form: a 2x2 constant-coefficient matrix acting on the field
components of a constant-curvature surface, built so that its
characteristic polynomial is exactly

    lam^2 + 2 (R + theta/2 - eta) lam + (R^2 + theta^2 + 2 (eta - theta) R) = 0.

Grid form: a matrix-free linear map on an N x N periodic grid over
[0, 2pi)^2 realizing

    dB/dt = -{v, B} + div(v) B + eta * Lap B,

with {v, B} = -curl(v x B) in the planar embedding and the Laplacian
expanded in an orthonormal frame with (spatially uniform) rotation
coefficients.  Spatial derivatives are 4th-order central differences;
spectral differentiation is reserved for test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridMismatch
from .geometry import Connection, Metric2

__all__ = [
    "DOMAIN_LENGTH",
    "MagneticField",
    "ReducedOperator",
    "GridOperator",
    "grid_coordinates",
    "grid_spacing",
    "d1",
    "d2",
    "divergence",
    "poisson_bracket",
    "curved_laplacian",
    "induction_rhs",
    "assemble_reduced",
    "assemble_grid",
]

DOMAIN_LENGTH = 2.0 * np.pi

_SOLENOIDAL_TOL = 1e-10


def grid_spacing(n: int) -> float:
    return DOMAIN_LENGTH / n


def grid_coordinates(n: int):
    """Node coordinates (X, Y) of the periodic grid, `ij` indexed."""
    x = np.arange(n) * grid_spacing(n)
    return np.meshgrid(x, x, indexing="ij")


# Spatial axes are always the last two array axes (x, then y), so the same
# stencils apply to a single scalar field or to a whole batch of them.

def d1(f, axis, h):
    """4th-order central first derivative along spatial axis 0 (x) or 1 (y)."""
    ax = f.ndim - 2 + axis
    fm2 = np.roll(f, 2, axis=ax)
    fm1 = np.roll(f, 1, axis=ax)
    fp1 = np.roll(f, -1, axis=ax)
    fp2 = np.roll(f, -2, axis=ax)
    return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)


def d2(f, axis, h):
    """4th-order central second derivative along spatial axis 0 (x) or 1 (y)."""
    ax = f.ndim - 2 + axis
    fm2 = np.roll(f, 2, axis=ax)
    fm1 = np.roll(f, 1, axis=ax)
    fp1 = np.roll(f, -1, axis=ax)
    fp2 = np.roll(f, -2, axis=ax)
    return (-fm2 + 16.0 * fm1 - 30.0 * f + 16.0 * fp1 - fp2) / (12.0 * h * h)


def divergence(v, h):
    """d_x v1 + d_y v2 of a (2, N, N) field."""
    return d1(v[0], 0, h) + d1(v[1], 1, h)


@dataclass(frozen=True)
class MagneticField:
    """Magnetic field in reduced (2-vector) or grid ((2, N, N)) form.

    When `solenoidal` is set on a grid field, the discrete divergence must
    vanish to 1e-10 in max norm at construction.
    """

    data: np.ndarray
    solenoidal: bool = False

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.shape == (2,):
            pass
        elif arr.ndim == 3 and arr.shape[0] == 2 and arr.shape[1] == arr.shape[2]:
            if self.solenoidal:
                div = divergence(arr, grid_spacing(arr.shape[1]))
                worst = float(np.max(np.abs(div)))
                if worst > _SOLENOIDAL_TOL:
                    raise ValueError(
                        f"field marked solenoidal has discrete divergence {worst:.3e}"
                    )
        else:
            raise ValueError(f"field must have shape (2,) or (2, N, N), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def reduced(cls, b1: float, b2: float) -> "MagneticField":
        return cls(np.array([b1, b2], dtype=float))

    @classmethod
    def grid(cls, b1, b2, solenoidal: bool = False) -> "MagneticField":
        return cls(np.stack([np.asarray(b1, dtype=float), np.asarray(b2, dtype=float)]),
                   solenoidal=solenoidal)

    @property
    def is_grid(self) -> bool:
        return self.data.ndim == 3

    @property
    def n(self) -> int:
        if not self.is_grid:
            raise ValueError("reduced field has no grid size")
        return self.data.shape[1]


def _field_data(b):
    return b.data if isinstance(b, MagneticField) else np.asarray(b, dtype=float)


def _require_same_grid(*fields):
    shapes = {f.shape for f in fields}
    if len(shapes) != 1:
        raise GridMismatch(f"grid shapes disagree: {sorted(shapes)}")
    shape = shapes.pop()
    if len(shape) != 3 or shape[0] != 2 or shape[1] != shape[2]:
        raise GridMismatch(f"expected (2, N, N) grid fields, got {shape}")
    return shape[1]


# -- componentwise kernels ---------------------------------------------------
#
# b1, b2 may carry leading batch axes; v components are plain (N, N) and
# broadcast against them.

def _bracket_components(v, b1, b2, h):
    w = v[0] * b2 - v[1] * b1
    return -d1(w, 1, h), d1(w, 0, h)


def _laplacian_components(b1, b2, ginv, gam, h):
    comps = (b1, b2)
    db = [[d1(comps[k], i, h) for i in range(2)] for k in range(2)]
    out = []
    for p in range(2):
        acc = ginv[0, 0] * d2(comps[p], 0, h) + ginv[1, 1] * d2(comps[p], 1, h)
        if ginv[0, 1] != 0.0:
            acc = acc + 2.0 * ginv[0, 1] * d1(d1(comps[p], 0, h), 1, h)
        for k in range(2):
            coef = sum(
                gam[l, j, k] * gam[p, i, l] * ginv[i, j]
                for i in range(2) for j in range(2) for l in range(2)
            )
            if coef != 0.0:
                acc = acc + coef * comps[k]
            for i in range(2):
                w = sum(gam[p, j, k] * ginv[i, j] for j in range(2))
                if w != 0.0:
                    acc = acc + w * db[k][i]
        out.append(acc)
    return out[0], out[1]


def _rhs_components(v, b1, b2, eta, ginv, gam, h, div_sign, v_is_zero):
    if v_is_zero:
        r1 = np.zeros_like(b1)
        r2 = np.zeros_like(b2)
    else:
        br1, br2 = _bracket_components(v, b1, b2, h)
        divv = divergence(v, h)
        r1 = -br1 + div_sign * divv * b1
        r2 = -br2 + div_sign * divv * b2
    if eta != 0.0:
        l1, l2 = _laplacian_components(b1, b2, ginv, gam, h)
        r1 = r1 + eta * l1
        r2 = r2 + eta * l2
    return r1, r2


# -- public grid operations --------------------------------------------------

def poisson_bracket(v: np.ndarray, b) -> np.ndarray:
    """{v, B} = -curl(v x B) on the periodic grid.

    v x B points out of plane with magnitude w = v1 B2 - v2 B1, and the
    in-plane curl of w zhat is (d_y w, -d_x w), so the bracket is
    (-d_y w, d_x w).
    """
    bd = _field_data(b)
    v = np.asarray(v, dtype=float)
    n = _require_same_grid(v, bd)
    h = grid_spacing(n)
    w1, w2 = _bracket_components(v, bd[0], bd[1], h)
    return np.stack([w1, w2])


def curved_laplacian(b, g: Metric2, conn: Connection) -> np.ndarray:
    """Frame-expanded Laplacian of a grid field.

    Component p:

        g^ij d_i d_j B^p
        + B^k gamma^l_jk gamma^p_il g^ij
        + gamma^p_jk g^ij d_i B^k

    The rotation coefficients are spatially uniform here, so the term in
    their gradient vanishes identically.  Reduces to the flat componentwise
    Laplacian for the identity metric and zero connection.
    """
    bd = _field_data(b)
    n = _require_same_grid(bd)
    h = grid_spacing(n)
    l1, l2 = _laplacian_components(bd[0], bd[1], g.inverse, conn.ricci_rotation, h)
    return np.stack([l1, l2])


def induction_rhs(v: np.ndarray, b, eta: float, g: Metric2,
                  conn: Connection, div_sign: int = +1) -> np.ndarray:
    """Right-hand side -{v, B} + s * div(v) B + eta * Lap B on the grid.

    `div_sign` (s above, +1 or -1) selects the sign of the compressibility
    term; the two conventions both occur in the literature and neither is
    privileged here.
    """
    if eta < 0.0:
        raise ValueError("eta must be non-negative")
    if div_sign not in (+1, -1):
        raise ValueError("div_sign must be +1 or -1")
    bd = _field_data(b)
    v = np.asarray(v, dtype=float)
    n = _require_same_grid(v, bd)
    h = grid_spacing(n)
    r1, r2 = _rhs_components(v, bd[0], bd[1], eta, g.inverse, conn.ricci_rotation,
                             h, div_sign, v_is_zero=not np.any(v))
    return np.stack([r1, r2])


# -- operator containers -----------------------------------------------------

@dataclass(frozen=True)
class ReducedOperator:
    """Constant 2x2 realization of the induction operator.

    `assemble_reduced` produces the canonical companion form; the parameter
    metadata is None for operators built from an explicit matrix.
    """

    matrix: np.ndarray
    ricci: Optional[float] = None
    theta: Optional[float] = None
    eta: Optional[float] = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("reduced operator matrix must be 2x2")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def kind(self) -> str:
        return "reduced"

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    def apply(self, b) -> np.ndarray:
        return self.matrix @ np.asarray(_field_data(b), dtype=float)


@dataclass(frozen=True)
class GridOperator:
    """Matrix-free discretization of the induction right-hand side."""

    velocity: np.ndarray
    metric: Metric2
    connection: Connection
    eta: float
    n: int
    div_sign: int = +1

    def __post_init__(self):
        v = np.array(self.velocity, dtype=float)
        _require_same_grid(v)
        if v.shape[1] != self.n:
            raise GridMismatch(f"velocity grid is {v.shape[1]}, operator declares N={self.n}")
        v.setflags(write=False)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "_v_zero", not np.any(v))

    @property
    def kind(self) -> str:
        return "grid"

    @property
    def size(self) -> int:
        return 2 * self.n * self.n

    @property
    def spacing(self) -> float:
        return grid_spacing(self.n)

    def apply(self, b) -> np.ndarray:
        bd = _field_data(b)
        if bd.shape != (2, self.n, self.n):
            raise GridMismatch(f"field shape {bd.shape} does not match N={self.n}")
        r1, r2 = self._rhs(bd[0], bd[1])
        return np.stack([r1, r2])

    def apply_block(self, block: np.ndarray) -> np.ndarray:
        """Apply to a batch of fields, shape (m, 2, N, N)."""
        r1, r2 = self._rhs(block[:, 0], block[:, 1])
        return np.stack([r1, r2], axis=1)

    def _rhs(self, b1, b2):
        return _rhs_components(self.velocity, b1, b2, self.eta, self.metric.inverse,
                               self.connection.ricci_rotation, self.spacing,
                               self.div_sign, self._v_zero)

    def stable_step(self, requested: float) -> float:
        """Largest internal step compatible with explicit 4th-order stepping.

        Diffusive bound 0.25 h^2 / eta, advective bound 0.5 h / max|v|,
        both capped by the requested step.
        """
        dt = requested
        h = self.spacing
        if self.eta > 0.0:
            dt = min(dt, 0.25 * h * h / self.eta)
        if not self._v_zero:
            vmax = float(np.max(np.abs(self.velocity)))
            if vmax > 0.0:
                dt = min(dt, 0.5 * h / vmax)
        return dt


def assemble_reduced(ricci: float, theta: float, eta: float) -> ReducedOperator:
    """Companion-form reduced operator for curvature `ricci` and expansion `theta`.

    The matrix [[0, -c], [1, -b]] with b = 2 (R + theta/2 - eta) and
    c = R^2 + theta^2 + 2 (eta - theta) R has trace -b and determinant c,
    i.e. exactly the characteristic quadratic the eigenvalue routes solve.
    """
    b = 2.0 * (ricci + theta / 2.0 - eta)
    c = ricci * ricci + theta * theta + 2.0 * (eta - theta) * ricci
    return ReducedOperator(np.array([[0.0, -c], [1.0, -b]]),
                           ricci=ricci, theta=theta, eta=eta)


def assemble_grid(v: np.ndarray, g: Metric2, conn: Connection, eta: float,
                  n: int, div_sign: int = +1) -> GridOperator:
    """Grid operator over [0, 2pi)^2; N must be at least 8."""
    if n < 8:
        raise ValueError("grid size must be at least 8")
    if eta < 0.0:
        raise ValueError("eta must be non-negative")
    v = np.asarray(v, dtype=float)
    if v.shape != (2, n, n):
        raise GridMismatch(f"velocity must have shape (2, {n}, {n}), got {v.shape}")
    return GridOperator(velocity=v, metric=g, connection=conn, eta=float(eta),
                        n=n, div_sign=div_sign)
