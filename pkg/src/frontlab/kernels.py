"""Compactly supported dispersal kernels and their scaling constants.

A kernel J is even, nonnegative, supported in [-1, 1], has unit mass and
J(0) > 0.  Only z >= 0 is ever stored or evaluated, so evenness holds by
construction rather than by numerical accident.  Two derived constants drive
the scaled solvers:

    c_star = 1 / integral_0^1 J(z) z^2 dz   (normalizes the dispersal operator)
    c_zero = 1 / integral_0^1 J(z) z  dz    (normalizes the boundary flux)

and the boundary-flux weight W(w) = integral_w^1 J(z) dz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateKernel

BUILTIN_FAMILIES = ("epanechnikov", "triangle", "quartic")

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A dispersal kernel, stored on z >= 0 with even extension implied.

    Custom tabulated kernels are linearly interpolated and renormalized to
    unit mass at construction; the factor applied is kept in
    ``renormalization`` so silent rescaling is visible to the caller.
    """

    family: str
    table: np.ndarray | None = None
    quadrature_points: int = 256
    renormalization: float = field(default=1.0, init=False)

    def __post_init__(self):
        if self.family in BUILTIN_FAMILIES:
            if self.table is not None:
                raise ValueError("table only allowed for family='custom'")
        elif self.family == "custom":
            if self.table is None:
                raise ValueError("custom kernel requires a table")
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 2:
                raise ValueError("table must have shape (n, 2) with n >= 2")
            z = tab[:, 0]
            if z[0] < 0.0 or z[-1] > 1.0 or np.any(np.diff(z) <= 0.0):
                raise ValueError("table abscissae must ascend within [0, 1]")
            if np.any(tab[:, 1] < 0.0):
                raise ValueError("kernel values must be nonnegative")
            object.__setattr__(self, "table", tab)
            mass = 2.0 * _integrate_table(tab, 0.0, 1.0)
            if mass <= 0.0:
                raise ValueError("custom kernel has zero mass")
            tab = np.column_stack([z, tab[:, 1] / mass])
            object.__setattr__(self, "table", tab)
            object.__setattr__(self, "renormalization", 1.0 / mass)
        else:
            raise ValueError(f"unknown kernel family: {self.family!r}")
        if self.quadrature_points < 1:
            raise ValueError("quadrature_points must be positive")
        if evaluate(self, 0.0) <= 0.0:
            raise ValueError("kernel must be positive at z = 0")

    def breakpoints(self) -> np.ndarray:
        """Abscissae in [0, 1] where J may lose smoothness."""
        if self.family == "custom":
            pts = np.concatenate([[0.0], self.table[:, 0], [1.0]])
            return np.unique(pts)
        return np.array([0.0, 1.0])


def from_file(path, quadrature_points: int = 256) -> KernelSpec:
    """Load a custom kernel from a two-column text file (z, J(z))."""
    tab = np.loadtxt(path, dtype=float, ndmin=2)
    return KernelSpec(family="custom", table=tab, quadrature_points=quadrature_points)


def _profile(kernel: KernelSpec, z: np.ndarray) -> np.ndarray:
    """J on z >= 0 ignoring the support cutoff (z is assumed in [0, 1])."""
    if kernel.family == "epanechnikov":
        return 0.75 * (1.0 - z * z)
    if kernel.family == "triangle":
        return 1.0 - z
    if kernel.family == "quartic":
        s = 1.0 - z * z
        return (15.0 / 16.0) * s * s
    return np.interp(z, kernel.table[:, 0], kernel.table[:, 1])


def evaluate(kernel: KernelSpec, z) -> np.ndarray | float:
    """J(|z|); zero outside the support [-1, 1]."""
    za = np.abs(np.asarray(z, dtype=float))
    inside = za < 1.0
    out = np.zeros_like(za)
    if np.any(inside):
        out[inside] = _profile(kernel, za[inside])
    if np.ndim(z) == 0:
        return float(out)
    return out


def scaled_eval(kernel: KernelSpec, eps: float, x) -> np.ndarray | float:
    """The concentrated kernel (1/eps) * J(x/eps), supported in [-eps, eps]."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    return evaluate(kernel, np.asarray(x, dtype=float) / eps) / eps


def _integrate_table(tab: np.ndarray, a: float, b: float) -> float:
    """Exact integral of the piecewise-linear table over [a, b] in [0, 1]."""
    z = np.concatenate([tab[:, 0], [1.0]]) if tab[-1, 0] < 1.0 else tab[:, 0]
    grid = np.unique(np.clip(np.concatenate([z, [a, b]]), a, b))
    vals = np.interp(grid, tab[:, 0], tab[:, 1])
    return float(np.trapezoid(vals, grid))


def integrate_against(kernel: KernelSpec, a: float, b: float, phi=None, breakpoints=()) -> float:
    """integral_a^b J(z) phi(z) dz on [0, 1] by panelled Gauss-Legendre.

    Panels are split at the kernel's breakpoints (and any extra ones supplied
    for kinks of phi) so piecewise-polynomial kernels integrate to machine
    accuracy against piecewise-polynomial phi.
    """
    a = max(a, 0.0)
    b = min(b, 1.0)
    if b <= a:
        return 0.0
    cuts = np.concatenate([kernel.breakpoints(), np.asarray(breakpoints, dtype=float)])
    edges = np.unique(np.clip(np.concatenate([cuts, [a, b]]), a, b))
    total = 0.0
    n_panels = max(kernel.quadrature_points, len(edges) - 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        m = max(1, int(round(n_panels * (hi - lo) / (b - a))))
        bounds = np.linspace(lo, hi, m + 1)
        mid = 0.5 * (bounds[:-1] + bounds[1:])
        half = 0.5 * (bounds[1:] - bounds[:-1])
        z = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        f = _profile(kernel, z)
        if phi is not None:
            f = f * phi(z)
        total += float(np.dot(w, f))
    return total


def moment(kernel: KernelSpec, k: int) -> float:
    """Half-line moment integral_0^1 J(z) z^k dz, for k <= 4."""
    if k < 0 or k > 4:
        raise ValueError("moment order must be in 0..4")
    if k == 0:
        return integrate_against(kernel, 0.0, 1.0)
    return integrate_against(kernel, 0.0, 1.0, lambda z: z**k)


def c_star(kernel: KernelSpec) -> float:
    """Inverse second half-moment; scales the dispersal operator."""
    m2 = moment(kernel, 2)
    if m2 <= 1e-12:
        raise DegenerateKernel("second moment vanishes; kernel concentrated at 0")
    return 1.0 / m2


def c_zero(kernel: KernelSpec) -> float:
    """Inverse first half-moment; scales the boundary flux. Always < c_star."""
    m1 = moment(kernel, 1)
    if m1 <= 1e-12:
        raise DegenerateKernel("first moment vanishes; kernel concentrated at 0")
    value = 1.0 / m1
    if not value < c_star(kernel):
        raise DegenerateKernel("flux constant not below operator constant")
    return value


def boundary_weight(kernel: KernelSpec, w: float) -> float:
    """Tail mass W(w) = integral_w^1 J(z) dz for w in [0, 1].

    W is nonincreasing with W(0) = 1/2 and W(1) = 0, and by Fubini
    integral_0^1 W(w) dw = 1 / c_zero.
    """
    if w < 0.0 or w > 1.0:
        raise ValueError("w must lie in [0, 1]")
    return integrate_against(kernel, w, 1.0)
