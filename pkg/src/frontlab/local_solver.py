"""Front-fixed solver for the Stefan-type free boundary problem.

The moving interval (g(t), h(t)) is mapped affinely onto the reference
interval [0, 1] via x = (1 - xi) g + xi h.  In the fixed frame the density w
obeys

    w_t = d / (h-g)^2 w_xixi + chi(xi) w_xi + f(t, x, w) + A eps^gamma1,
    chi = [(1 - xi) g' + xi h'] / (h - g),

with Dirichlet zeros at xi in {0, 1}, coupled to the boundary motion

    g' = -mu v_x(t, g) - B eps^gamma1,    h' = -mu v_x(t, h) + B eps^gamma1.

Time stepping: boundaries by explicit Euler with metrics frozen at t_n,
interior by Crank-Nicolson on diffusion with explicit advection/reaction.
Every floating-point expression that couples mirrored nodes is written so a
symmetric state maps to an exactly symmetric successor; the tridiagonal solve
is averaged with its reflection to make it reflection-equivariant as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import CflViolation, DegenerateDomain, OutOfHorizon, PositivityLoss
from .problem import ValidatedConfig, eval_initial, eval_reaction, require_valid

MIN_GAP = 1e-6
POSITIVITY_FLOOR = -1e-10


@dataclass(frozen=True)
class PerturbationKnobs:
    """Size-eps^gamma1 perturbation of the reaction and boundary velocities.

    eps = 0 renders the knobs inert (the perturbed terms vanish exactly).
    """

    A: float = 0.0
    B: float = 0.0
    gamma1: float = 0.4
    eps: float = 0.0

    def __post_init__(self):
        if self.A < 0.0:
            raise ValueError("A must be nonnegative")
        if not 0.0 < self.gamma1 < 0.5:
            raise ValueError("gamma1 must lie in (0, 1/2)")
        if self.eps < 0.0:
            raise ValueError("eps must be nonnegative")

    @property
    def source_shift(self) -> float:
        return self.A * self.eps**self.gamma1

    @property
    def boundary_shift(self) -> float:
        return self.B * self.eps**self.gamma1


INERT_KNOBS = PerturbationKnobs()

PRESETS = {"i1": (1.0, 1.0), "i2": (0.0, -2.0), "none": (0.0, 0.0)}


def preset_knobs(name: str, eps: float, gamma1: float = 0.4) -> PerturbationKnobs:
    """The two canonical perturbations: i1 pushes out, i2 pulls in."""
    try:
        A, B = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return PerturbationKnobs(A=A, B=B, gamma1=gamma1, eps=eps)


@dataclass(frozen=True, eq=False)
class FixedDomainState:
    """Front-fixed snapshot: boundary positions plus nodal values on [0, 1]."""

    t: float
    g: float
    h: float
    values: np.ndarray  # v at xi_j = j/N, j = 0..N; endpoints pinned to 0

    @property
    def n_cells(self) -> int:
        return self.values.size - 1

    @property
    def width(self) -> float:
        return self.h - self.g


@dataclass(frozen=True, eq=False)
class LocalSolution:
    """Trajectory of (v, g, h): dense boundary track plus timed snapshots."""

    snapshots: tuple[FixedDomainState, ...]
    boundary_times: np.ndarray
    boundary_g: np.ndarray
    boundary_h: np.ndarray
    n_cells: int
    dt: float
    horizon: float

    @property
    def snapshot_times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def g_of(self, t):
        return np.interp(t, self.boundary_times, self.boundary_g)

    def h_of(self, t):
        return np.interp(t, self.boundary_times, self.boundary_h)

    def snapshot_nodes(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Physical node positions and values of snapshot k."""
        state = self.snapshots[k]
        xi = np.arange(state.values.size) / state.n_cells
        x = (1.0 - xi) * state.g + xi * state.h
        return x, state.values.copy()

    def profile_at(self, k: int, x) -> np.ndarray:
        """Snapshot k evaluated at physical positions x, zero outside (g, h)."""
        state = self.snapshots[k]
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = (x - state.g) / state.width
        grid = np.arange(state.values.size) / state.n_cells
        vals = np.interp(xi, grid, state.values)
        vals[(xi <= 0.0) | (xi >= 1.0)] = 0.0
        return vals

    def sample(self, t: float, x) -> np.ndarray | float:
        """Linear interpolation in t between snapshots and xi within them."""
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


def transform_to_physical(state: FixedDomainState, xi: float) -> float:
    """Reference coordinate to physical position: affine between g and h."""
    if not state.g < state.h:
        raise DegenerateDomain("boundaries must satisfy g < h", state.t)
    return (1.0 - xi) * state.g + xi * state.h


def boundary_velocities(
    state: FixedDomainState, knobs: PerturbationKnobs, mu: float
) -> tuple[float, float]:
    """Boundary speeds from one-sided second-order flux stencils.

    The stencils at g and h are exact floating-point mirrors, so a symmetric
    state yields g_dot == -h_dot exactly.
    """
    w = state.values
    n = state.n_cells
    if n < 4:
        raise ValueError("need at least 4 cells for the boundary stencils")
    gap = state.width
    if gap < MIN_GAP:
        raise DegenerateDomain(f"domain collapsed: h - g = {gap:.3e}", state.t)
    scale = 2.0 * (1.0 / n) * gap
    slope_g = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / scale
    slope_h = (3.0 * w[n] - 4.0 * w[n - 1] + w[n - 2]) / scale
    shift = knobs.boundary_shift
    g_dot = -mu * slope_g - shift
    h_dot = -mu * slope_h + shift
    return g_dot, h_dot


def _solve_tridiagonal_symmetric(r: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (I - r*D2) w = rhs with Dirichlet zeros, reflection-equivariantly.

    The matrix is symmetric Toeplitz, hence invariant under index reversal;
    averaging the banded solve with its reflected twin makes the numerical
    solution map commute with reflection exactly.
    """
    m = rhs.size
    ab = np.empty((3, m))
    ab[0, :] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :] = -r
    forward = solve_banded((1, 1), ab, rhs, check_finite=False)
    backward = solve_banded((1, 1), ab, rhs[::-1], check_finite=False)[::-1]
    return 0.5 * (forward + backward)


def _check_cfl(state_t, dt, dxi, chi, L0):
    cfl = dt * float(np.max(np.abs(chi))) / dxi
    if cfl > 1.0 + 1e-12:
        raise CflViolation(f"advection CFL {cfl:.3f} > 1; reduce dt", state_t)
    if dt * L0 > 0.5 + 1e-12:
        raise CflViolation(f"dt * L0 = {dt * L0:.3f} > 1/2; reduce dt", state_t)


def step(
    state: FixedDomainState,
    dt: float,
    vconf: ValidatedConfig,
    knobs: PerturbationKnobs = INERT_KNOBS,
    *,
    source=None,
    velocity_override: tuple[float, float] | None = None,
) -> FixedDomainState:
    """Advance one step of size dt by a predictor-corrector sweep.

    The predictor is a plain Euler/Crank-Nicolson step with coefficients
    frozen at t_n; the corrector re-advances with trapezoidal averages of the
    boundary velocities and explicit terms, which keeps the discrete mass
    ledger second-order accurate in dt.  ``velocity_override`` pins the
    boundary motion (used by verification harnesses to freeze the domain);
    ``source`` adds an extra forcing s(t, x).
    """
    w = state.values
    n = state.n_cells
    gap = state.width
    if gap < MIN_GAP:
        raise DegenerateDomain(f"domain collapsed: h - g = {gap:.3e}", state.t)
    if velocity_override is not None:
        vel0 = velocity_override
    else:
        vel0 = boundary_velocities(state, knobs, vconf.mu)

    dxi = 1.0 / n
    xi = np.arange(n + 1) / n
    chi0 = ((1.0 - xi) * vel0[0] + xi * vel0[1]) / gap
    _check_cfl(state.t, dt, dxi, chi0, vconf.L0)

    x0 = (1.0 - xi) * state.g + xi * state.h
    t1 = state.t + dt
    second = (w[:-2] + w[2:]) - 2.0 * w[1:-1]
    centered = w[2:] - w[:-2]
    r0 = vconf.d * dt / (2.0 * gap * gap * dxi * dxi)
    shift = knobs.source_shift

    explicit0 = (
        chi0[1:-1] * centered / (2.0 * dxi)
        + eval_reaction(vconf.reaction, state.t, x0[1:-1], np.maximum(w[1:-1], 0.0))
        + shift
    )
    if source is not None:
        explicit0 = explicit0 + source(state.t, x0[1:-1])

    predictor = np.zeros_like(w)
    predictor[1:-1] = _solve_tridiagonal_symmetric(r0, w[1:-1] + r0 * second + dt * explicit0)
    np.maximum(predictor, 0.0, out=predictor)
    pred_state = FixedDomainState(
        t=t1, g=state.g + dt * vel0[0], h=state.h + dt * vel0[1], values=predictor
    )
    if pred_state.width < MIN_GAP:
        raise DegenerateDomain("domain collapsed within a step", state.t)

    if velocity_override is not None:
        vel1 = velocity_override
    else:
        vel1 = boundary_velocities(pred_state, knobs, vconf.mu)
    g_dot = 0.5 * (vel0[0] + vel1[0])
    h_dot = 0.5 * (vel0[1] + vel1[1])
    g1 = state.g + dt * g_dot
    h1 = state.h + dt * h_dot
    gap1 = h1 - g1
    if gap1 < MIN_GAP:
        raise DegenerateDomain("domain collapsed within a step", state.t)

    chi1 = ((1.0 - xi) * vel1[0] + xi * vel1[1]) / gap1
    _check_cfl(state.t, dt, dxi, chi1, vconf.L0)
    x1 = (1.0 - xi) * g1 + xi * h1
    centered_p = predictor[2:] - predictor[:-2]
    explicit1 = (
        chi1[1:-1] * centered_p / (2.0 * dxi)
        + eval_reaction(vconf.reaction, t1, x1[1:-1], predictor[1:-1])
        + shift
    )
    if source is not None:
        explicit1 = explicit1 + source(t1, x1[1:-1])

    r1 = vconf.d * dt / (2.0 * gap1 * gap1 * dxi * dxi)
    rhs = w[1:-1] + r0 * second + 0.5 * dt * (explicit0 + explicit1)
    interior = _solve_tridiagonal_symmetric(r1, rhs)

    new_values = np.zeros_like(w)
    new_values[1:-1] = interior
    low = float(np.min(new_values))
    if low < POSITIVITY_FLOOR:
        raise PositivityLoss(f"value {low:.3e} below positivity floor", t1)
    np.maximum(new_values, 0.0, out=new_values)
    new_values[0] = 0.0
    new_values[-1] = 0.0

    return FixedDomainState(t=t1, g=g1, h=h1, values=new_values)


def initial_state(vconf: ValidatedConfig, n_cells: int) -> FixedDomainState:
    xi = np.arange(n_cells + 1) / n_cells
    h0 = vconf.h0
    x = (1.0 - xi) * (-h0) + xi * h0
    values = np.asarray(eval_initial(vconf.initial, x), dtype=float)
    values[0] = 0.0
    values[-1] = 0.0
    return FixedDomainState(t=0.0, g=-h0, h=h0, values=values)


def _plan_steps(T: float, dt: float) -> tuple[int, float]:
    n_steps = max(1, int(round(T / dt)))
    if abs(n_steps * dt - T) > 1e-9 * T:
        n_steps = int(np.ceil(T / dt))
    return n_steps, T / n_steps


def solve(
    vconf: ValidatedConfig,
    knobs: PerturbationKnobs = INERT_KNOBS,
    n_cells: int = 512,
    dt: float | None = None,
    snapshot_times=None,
    *,
    source=None,
    velocity_override: tuple[float, float] | None = None,
) -> LocalSolution:
    """March the front-fixed problem from t = 0 to the config horizon."""
    require_valid(vconf)
    if n_cells < 32:
        raise ValueError("need at least 32 cells")
    T = vconf.T
    if dt is None:
        state0 = initial_state(vconf, n_cells)
        g0, h0_dot = boundary_velocities(state0, knobs, vconf.mu)
        speed = max(abs(g0), abs(h0_dot), 1e-12)
        dt = min(0.25 * (2.0 * vconf.h0 / n_cells) / speed, T / 64.0)
        if vconf.L0 > 0.0:
            dt = min(dt, 0.4 / vconf.L0)
    n_steps, dt_eff = _plan_steps(T, dt)

    if snapshot_times is None:
        snapshot_times = np.linspace(0.0, T, 65)
    want = np.unique(np.clip(np.rint(np.asarray(snapshot_times) / dt_eff).astype(int), 0, n_steps))

    times = np.empty(n_steps + 1)
    gs = np.empty(n_steps + 1)
    hs = np.empty(n_steps + 1)
    snapshots: list[FixedDomainState] = []

    state = initial_state(vconf, n_cells)
    want_set = set(int(k) for k in want)
    for k in range(n_steps + 1):
        times[k] = state.t
        gs[k] = state.g
        hs[k] = state.h
        if k in want_set:
            snapshots.append(
                FixedDomainState(state.t, state.g, state.h, state.values.copy())
            )
        if k == n_steps:
            break
        state = step(
            state,
            dt_eff,
            vconf,
            knobs,
            source=source,
            velocity_override=velocity_override,
        )

    return LocalSolution(
        snapshots=tuple(snapshots),
        boundary_times=times,
        boundary_g=gs,
        boundary_h=hs,
        n_cells=n_cells,
        dt=dt_eff,
        horizon=T,
    )
