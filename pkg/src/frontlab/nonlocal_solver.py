"""Eulerian solver for the scaled nonlocal-dispersal free boundary problem.

The density lives on a fixed uniform grid x_j = j * dx (integer-indexed and
symmetric about 0) while the boundaries g, h move continuously; nodes outside
(g, h) hold exact zeros.  The dispersal operator is

    L[u](x) = (d c_star / eps^2) [ (J_eps * u)(x) - u(x) ],

discretized with a product-integration stencil: hat-function moments of J,
then a two-parameter correction making the discrete mass and second moment
match the kernel's exactly.  The corrected weights stay nonnegative, so the
explicit update is a convex combination under the CFL limit and positivity
is structural.

Boundary motion follows the flux law

    h'(t) = mu * coeff * integral_0^1 W(w) u(h - offset - eps w) dw,

with W the kernel tail mass, offset = eps^beta and coeff = c_zero eps^-beta
for the modified variant, offset = 0 and coeff = c1 / eps for the unmodified
one.  The w-integral uses exact-moment hat weights of W, so a constant
profile reproduces the Fubini identity to rounding.

Left-boundary quantities are evaluated by reflecting the state and reusing
the right-boundary code path; with the kernel even this is exact, and it
makes symmetric data evolve symmetrically to the last bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels as kmod
from .errors import (
    CflViolation,
    DomainTooSmall,
    OutOfHorizon,
    PositivityLoss,
    ResolutionTooCoarse,
)
from .problem import ValidatedConfig, eval_initial, eval_reaction, require_valid

POSITIVITY_FLOOR = -1e-10


@dataclass(frozen=True)
class NonlocalVariant:
    """Boundary-flux variant: 'modified' (eps^beta offset) or 'unmodified'."""

    kind: str = "modified"
    beta: float = 0.5
    c1: float | None = None

    def __post_init__(self):
        if self.kind == "modified":
            if not 0.0 < self.beta < 1.0:
                raise ValueError("beta must lie in (0, 1)")
        elif self.kind == "unmodified":
            if self.c1 is None or self.c1 <= 0.0:
                raise ValueError("unmodified variant requires c1 > 0")
        else:
            raise ValueError(f"unknown variant kind: {self.kind!r}")

    def offset(self, eps: float) -> float:
        return eps**self.beta if self.kind == "modified" else 0.0

    def coefficient(self, kernel: kmod.KernelSpec, eps: float) -> float:
        if self.kind == "modified":
            return kmod.c_zero(kernel) * eps**-self.beta
        return self.c1 / eps


@dataclass(frozen=True, eq=False)
class EulerianState:
    """Grid snapshot: values at x_j = j*dx for j = j_min..j_min+len-1."""

    t: float
    g: float
    h: float
    dx: float
    j_min: int
    values: np.ndarray

    @property
    def x_min(self) -> float:
        return self.j_min * self.dx

    @property
    def x_max(self) -> float:
        return (self.j_min + self.values.size - 1) * self.dx

    def grid(self) -> np.ndarray:
        return (self.j_min + np.arange(self.values.size)) * self.dx

    def active_mask(self) -> np.ndarray:
        x = self.grid()
        return (x > self.g) & (x < self.h)


def _reflect(state: EulerianState) -> EulerianState:
    return EulerianState(
        t=state.t,
        g=-state.h,
        h=-state.g,
        dx=state.dx,
        j_min=-(state.j_min + state.values.size - 1),
        values=state.values[::-1],
    )


# -- stencils -----------------------------------------------------------------


def _hat_moments(kernel: kmod.KernelSpec, nodes: np.ndarray, delta: float) -> np.ndarray:
    """integral J(z) hat_i(z) dz for hats of half-width delta at the nodes."""
    out = np.empty(nodes.size)
    for i, zi in enumerate(nodes):
        lo, hi = zi - delta, zi + delta

        def hat(z, zi=zi):
            return np.maximum(0.0, 1.0 - np.abs(z - zi) / delta)

        out[i] = kmod.integrate_against(kernel, lo, hi, hat, breakpoints=(zi,))
    return out


@lru_cache(maxsize=64)
def operator_stencil(kernel: kmod.KernelSpec, n_sub: int) -> np.ndarray:
    """Nonnegative convolution weights on z = m/n_sub, m = -n_sub..n_sub.

    Hat-function moments of J are corrected by a factor 1 + alpha + gamma z^2
    so the stencil's mass is exactly 1 and its second moment exactly matches
    2 * moment(J, 2); the operator is then exact on quadratics while every
    weight remains nonnegative.
    """
    if n_sub < 2:
        raise ValueError("need at least 2 subdivisions of the kernel support")
    delta = 1.0 / n_sub
    z_pos = np.arange(n_sub + 1) * delta
    half = _hat_moments(kernel, z_pos, delta)
    weights = np.concatenate([half[:0:-1], half])  # even extension, exact
    z = np.concatenate([-z_pos[:0:-1], z_pos])
    z2 = z * z
    s0 = float(np.sum(weights))
    s2 = float(np.dot(weights, z2))
    s4 = float(np.dot(weights, z2 * z2))
    target2 = 2.0 * kmod.moment(kernel, 2)
    det = s0 * s4 - s2 * s2
    alpha = ((1.0 - s0) * s4 - (target2 - s2) * s2) / det
    gamma = ((target2 - s2) * s0 - (1.0 - s0) * s2) / det
    corrected = weights * (1.0 + alpha + gamma * z2)
    if np.any(corrected < 0.0):
        raise ValueError("moment correction produced a negative weight")
    return corrected


@lru_cache(maxsize=64)
def flux_weights(kernel: kmod.KernelSpec, n_sub: int) -> np.ndarray:
    """Quadrature weights for integral_0^1 W(w) u(w) dw at w_i = i/n_sub.

    By Fubini, integrating W against a hat equals integrating J against the
    hat's cumulative integral; the weights therefore sum to the exact first
    kernel moment, which is what makes the constant-profile flux identity
    come out to rounding error.
    """
    if n_sub < 2:
        raise ValueError("need at least 2 subdivisions of the flux window")
    delta = 1.0 / n_sub
    out = np.empty(n_sub + 1)
    for i in range(n_sub + 1):
        wi = i * delta
        lo, hi = wi - delta, wi + delta

        def hat_cum(z, wi=wi):
            # integral_0^z of the hat at wi (support clipped to [0, 1])
            lo_i = max(wi - delta, 0.0)
            hi_i = min(wi + delta, 1.0)
            left = np.clip(np.minimum(z, wi) - lo_i, 0.0, None)
            rise = 0.5 * left * left / delta  # ascending flank: integrand (w-lo)/delta
            right = np.clip(np.minimum(z, hi_i) - wi, 0.0, None)
            fall = right - 0.5 * right * right / delta
            return rise + fall

        out[i] = kmod.integrate_against(kernel, 0.0, 1.0, hat_cum, breakpoints=(lo, wi, hi))
    return out


def _convolve_symmetric(values: np.ndarray, stencil: np.ndarray) -> np.ndarray:
    """Discrete convolution averaged with its reflection.

    The average commutes with index reversal exactly in floating point, so a
    symmetric state has an exactly symmetric image.
    """
    forward = np.convolve(values, stencil, mode="same")
    backward = np.convolve(values[::-1], stencil, mode="same")[::-1]
    return 0.5 * (forward + backward)


def _require_resolution(dx: float, eps: float, t: float):
    if dx > eps / 8.0 + 1e-12 * eps:
        raise ResolutionTooCoarse(f"dx = {dx:g} exceeds eps/8 = {eps / 8:g}", t)


def apply_nonlocal_operator(
    state: EulerianState, kernel: kmod.KernelSpec, eps: float, d: float
) -> np.ndarray:
    """(d c_star / eps^2) (J_eps * u - u) on active nodes, zero elsewhere.

    Because u vanishes outside (g, h), the zero-extended discrete convolution
    coincides with the integral over the active interval.
    """
    _require_resolution(state.dx, eps, state.t)
    n_sub = int(round(eps / state.dx))
    stencil = operator_stencil(kernel, n_sub)
    conv = _convolve_symmetric(state.values, stencil)
    scale = d * kmod.c_star(kernel) / (eps * eps)
    out = scale * (conv - state.values)
    out[~state.active_mask()] = 0.0
    return out


def interp_pinned(state: EulerianState, ys: np.ndarray) -> np.ndarray:
    """Linear interpolation of u with exact zeros pinned at g and h.

    In cells straddling a boundary the reconstruction ramps to an exact zero
    at the boundary position instead of at the outside node.  No zero
    extension is applied here; callers that need it mask afterwards.
    """
    ys = np.asarray(ys, dtype=float)
    u = state.values
    dx = state.dx
    pos = ys / dx - state.j_min
    k = np.clip(np.floor(pos).astype(int), 0, u.size - 2)
    frac = pos - k
    x_left = (state.j_min + k) * dx
    x_right = x_left + dx
    vals = u[k] * (1.0 - frac) + u[k + 1] * frac
    straddle_g = (x_left < state.g) & (x_right > state.g)
    if np.any(straddle_g):
        span = x_right - state.g
        lam = np.clip((ys - state.g) / np.where(span > 0.0, span, 1.0), 0.0, 1.0)
        vals = np.where(straddle_g, u[k + 1] * lam, vals)
    straddle_h = (x_left < state.h) & (x_right > state.h)
    if np.any(straddle_h):
        span = state.h - x_left
        lam = np.clip((state.h - ys) / np.where(span > 0.0, span, 1.0), 0.0, 1.0)
        vals = np.where(straddle_h, u[k] * lam, vals)
    return vals


def _right_flux_magnitude(
    state: EulerianState, kernel: kmod.KernelSpec, eps: float, offset: float
) -> float:
    """integral_0^1 W(w) u(h - offset - eps w) dw by exact-moment weights."""
    n_sub = max(2, int(round(eps / state.dx)))
    omega = flux_weights(kernel, n_sub)
    w_nodes = np.arange(n_sub + 1) / n_sub
    ys = state.h - offset - eps * w_nodes
    return float(np.dot(omega, interp_pinned(state, ys)))


def boundary_flux(
    state: EulerianState,
    kernel: kmod.KernelSpec,
    eps: float,
    mu: float,
    variant: NonlocalVariant,
    side: str,
) -> float:
    """Signed boundary speed from the near-boundary flux window.

    side='right' returns h' >= 0, side='left' returns g' <= 0.  The left side
    reflects the state and reuses the right-side code path (J is even), which
    keeps symmetric runs exactly symmetric.
    """
    _require_resolution(state.dx, eps, state.t)
    offset = variant.offset(eps)
    if state.h - state.g <= 2.0 * (offset + eps):
        raise DomainTooSmall(
            f"active interval {state.h - state.g:g} below flux window 2*(offset+eps)",
            state.t,
        )
    coeff = variant.coefficient(kernel, eps)
    if side == "right":
        return mu * coeff * _right_flux_magnitude(state, kernel, eps, offset)
    if side == "left":
        return -mu * coeff * _right_flux_magnitude(_reflect(state), kernel, eps, offset)
    raise ValueError("side must be 'left' or 'right'")


def _grow_if_needed(state: EulerianState, margin: float) -> EulerianState:
    """Double the grid extent on the side the boundary is about to overrun."""
    values, j_min = state.values, state.j_min
    length = values.size
    grew = False
    if state.g - margin <= (j_min + 1) * state.dx:
        values = np.concatenate([np.zeros(length), values])
        j_min -= length
        grew = True
    j_max = j_min + values.size - 1
    if state.h + margin >= (j_max - 1) * state.dx:
        values = np.concatenate([values, np.zeros(length)])
        grew = True
    if not grew:
        return state
    return EulerianState(state.t, state.g, state.h, state.dx, j_min, values)


def step(
    state: EulerianState,
    dt: float,
    vconf: ValidatedConfig,
    kernel: kmod.KernelSpec,
    eps: float,
    variant: NonlocalVariant,
) -> EulerianState:
    """One explicit Euler step: boundaries first, then densities.

    Under dt * d * c_star / eps^2 <= 1 the value update is a convex
    combination of nonnegative terms plus dt * f, so positivity only depends
    on the reaction respecting its Lipschitz bound.
    """
    _require_resolution(state.dx, eps, state.t)
    lam = dt * vconf.d * kmod.c_star(kernel) / (eps * eps)
    if lam > 1.0 + 1e-12:
        raise CflViolation(f"dt*d*c_star/eps^2 = {lam:.3f} > 1; reduce dt", state.t)
    if dt * vconf.L0 > 0.5 + 1e-12:
        raise CflViolation(f"dt * L0 = {dt * vconf.L0:.3f} > 1/2; reduce dt", state.t)

    h_dot = boundary_flux(state, kernel, eps, vconf.mu, variant, "right")
    g_dot = boundary_flux(state, kernel, eps, vconf.mu, variant, "left")
    g_new = state.g + dt * g_dot
    h_new = state.h + dt * h_dot

    rate = apply_nonlocal_operator(state, kernel, eps, vconf.d)
    x = state.grid()
    new_values = state.values + dt * (
        rate + eval_reaction(vconf.reaction, state.t, x, np.maximum(state.values, 0.0))
    )
    low = float(np.min(new_values))
    if low < POSITIVITY_FLOOR:
        raise PositivityLoss(f"value {low:.3e} below positivity floor", state.t + dt)
    np.maximum(new_values, 0.0, out=new_values)
    new_values[(x <= g_new) | (x >= h_new)] = 0.0

    out = EulerianState(state.t + dt, g_new, h_new, state.dx, state.j_min, new_values)
    return _grow_if_needed(out, variant.offset(eps) + eps + 2.0 * state.dx)


@dataclass(frozen=True, eq=False)
class NonlocalSolution:
    """Trajectory of (u, g, h) on the fixed grid; mirrors LocalSolution."""

    snapshots: tuple[EulerianState, ...]
    boundary_times: np.ndarray
    boundary_g: np.ndarray
    boundary_h: np.ndarray
    dx: float
    dt: float
    eps: float
    variant: NonlocalVariant
    horizon: float

    @property
    def snapshot_times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def g_of(self, t):
        return np.interp(t, self.boundary_times, self.boundary_g)

    def h_of(self, t):
        return np.interp(t, self.boundary_times, self.boundary_h)

    def snapshot_nodes(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        state = self.snapshots[k]
        return state.grid(), state.values.copy()

    def profile_at(self, k: int, x) -> np.ndarray:
        state = self.snapshots[k]
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        vals = interp_pinned(state, x_arr)
        vals[(x_arr <= state.g) | (x_arr >= state.h)] = 0.0
        return vals

    def sample(self, t: float, x) -> np.ndarray | float:
        if t > self.horizon * (1.0 + 1e-12) + 1e-15:
            raise OutOfHorizon(f"t = {t} beyond horizon {self.horizon}")
        if t < 0.0:
            raise OutOfHorizon("t must be nonnegative")
        times = self.snapshot_times
        k = int(np.searchsorted(times, t, side="right") - 1)
        k = max(0, min(k, len(times) - 1))
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if k == len(times) - 1 or times[k] >= t:
            vals = self.profile_at(k, x_arr)
        else:
            t0, t1 = times[k], times[k + 1]
            lam = (t - t0) / (t1 - t0)
            vals = (1.0 - lam) * self.profile_at(k, x_arr) + lam * self.profile_at(k + 1, x_arr)
        outside = (x_arr <= self.g_of(t)) | (x_arr >= self.h_of(t))
        vals[outside] = 0.0
        if np.ndim(x) == 0:
            return float(vals[0])
        return vals


def initial_state(vconf: ValidatedConfig, dx: float, extent: float) -> EulerianState:
    j_max = int(np.ceil(extent / dx)) + 2
    j = np.arange(-j_max, j_max + 1)
    x = j * dx
    values = np.asarray(eval_initial(vconf.initial, x), dtype=float)
    h0 = vconf.h0
    values[(x <= -h0) | (x >= h0)] = 0.0
    return EulerianState(t=0.0, g=-h0, h=h0, dx=dx, j_min=-j_max, values=values)


def solve(
    vconf: ValidatedConfig,
    kernel: kmod.KernelSpec,
    eps: float,
    variant: NonlocalVariant = NonlocalVariant(),
    dx: float | None = None,
    dt: float | None = None,
    snapshot_times=None,
    cfl_sigma: float = 0.5,
) -> NonlocalSolution:
    """March the nonlocal problem from t = 0 to the config horizon."""
    require_valid(vconf)
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if dx is None:
        dx = eps / 16.0
    _require_resolution(dx, eps, 0.0)
    offset = variant.offset(eps)
    if 2.0 * (offset + eps) >= 2.0 * vconf.h0:
        raise DomainTooSmall(
            f"offset + eps = {offset + eps:g} leaves no room inside h0 = {vconf.h0:g}", 0.0
        )
    d_cstar = vconf.d * kmod.c_star(kernel)
    if dt is None:
        if not 0.0 < cfl_sigma <= 1.0:
            raise ValueError("cfl_sigma must lie in (0, 1]")
        dt = cfl_sigma * eps * eps / d_cstar
        if vconf.L0 > 0.0:
            dt = min(dt, 0.4 / vconf.L0)
    T = vconf.T
    n_steps = max(1, int(round(T / dt)))
    if abs(n_steps * dt - T) > 1e-9 * T:
        n_steps = int(np.ceil(T / dt))
    dt_eff = T / n_steps

    level = max(vconf.sup_v0, vconf.K if np.isfinite(vconf.K) else vconf.sup_v0)
    speed = 4.0 * vconf.mu * level * (1.0 + 2.0 / vconf.h0)
    extent = vconf.h0 + speed * T + offset + 2.0 * eps

    if snapshot_times is None:
        snapshot_times = np.linspace(0.0, T, 65)
    want = np.unique(np.clip(np.rint(np.asarray(snapshot_times) / dt_eff).astype(int), 0, n_steps))
    want_set = set(int(k) for k in want)

    times = np.empty(n_steps + 1)
    gs = np.empty(n_steps + 1)
    hs = np.empty(n_steps + 1)
    snapshots: list[EulerianState] = []

    state = initial_state(vconf, dx, extent)
    for k in range(n_steps + 1):
        times[k] = state.t
        gs[k] = state.g
        hs[k] = state.h
        if k in want_set:
            snapshots.append(
                EulerianState(state.t, state.g, state.h, state.dx, state.j_min, state.values.copy())
            )
        if k == n_steps:
            break
        state = step(state, dt_eff, vconf, kernel, eps, variant)

    return NonlocalSolution(
        snapshots=tuple(snapshots),
        boundary_times=times,
        boundary_g=gs,
        boundary_h=hs,
        dx=dx,
        dt=dt_eff,
        eps=eps,
        variant=variant,
        horizon=T,
    )
