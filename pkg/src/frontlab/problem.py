"""Physical parameters, reaction terms and initial profiles.

Admissibility is checked once by :func:`validate`, which names each violated
hypothesis by its rule id instead of raising, so batch drivers can report the
full list.  Rule ids:

    (config)  positivity/consistency of the plain parameters
    (f1)      f vanishes at u = 0 and is locally Lipschitz in u
    (f2)      a threshold K exists with f <= 0 for u > K
    (1.2a)    v0 vanishes at +-h0 with nonzero slope and is positive inside

Solvers only ever see a :class:`ValidatedConfig`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NegativeDensity

REACTION_FAMILIES = ("zero", "fisher_kpp", "custom_polynomial")
INITIAL_FAMILIES = ("quadratic_bump", "cosine_bump", "custom_table")


@dataclass(frozen=True)
class ReactionSpec:
    """Reaction term f(u). Built-ins are autonomous in (t, x).

    ``custom_polynomial`` coefficients ascend from the constant term, which
    must be zero for admissibility.
    """

    family: str = "zero"
    a: float = 1.0
    b: float = 1.0
    coefficients: tuple[float, ...] = ()
    lipschitz_bound_hint: float | None = None


@dataclass(frozen=True, eq=False)
class InitialDataSpec:
    """Initial profile v0 on [-h0, h0], extended by zero outside."""

    family: str = "quadratic_bump"
    V: float = 1.0
    h0: float = 1.0
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.table is not None:
            object.__setattr__(self, "table", np.asarray(self.table, dtype=float))


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    d: float = 1.0
    mu: float = 1.0
    h0: float = 1.0
    T: float = 1.0
    reaction: ReactionSpec = field(default_factory=ReactionSpec)
    initial: InitialDataSpec = field(default_factory=InitialDataSpec)


@dataclass(frozen=True, eq=False)
class ValidatedConfig:
    """A ProblemConfig annotated with derived bounds.

    ``violations`` is empty exactly when the config is admissible; ``K`` is a
    density level above which the reaction is nonpositive and ``L0`` a
    Lipschitz bound for f on the densities the run can reach.
    """

    config: ProblemConfig
    K: float = 0.0
    L0: float = 0.0
    sup_v0: float = 0.0
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __getattr__(self, name):
        # Guard dunder/config lookups so pickling cannot recurse before
        # instance state exists.
        if name.startswith("_") or name == "config":
            raise AttributeError(name)
        return getattr(self.config, name)


def eval_reaction(spec: ReactionSpec, t: float, x, u):
    """f(t, x, u) for u >= 0; raises NegativeDensity on negative input."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0.0):
        raise NegativeDensity("reaction evaluated at negative density")
    if spec.family == "zero":
        out = np.zeros_like(u)
    elif spec.family == "fisher_kpp":
        out = u * (spec.a - spec.b * u)
    elif spec.family == "custom_polynomial":
        out = np.zeros_like(u)
        for c in reversed(spec.coefficients):
            out = out * u + c
    else:
        raise ValueError(f"unknown reaction family: {spec.family!r}")
    if out.ndim == 0:
        return float(out)
    return out


def _reaction_derivative(spec: ReactionSpec, u: np.ndarray) -> np.ndarray:
    if spec.family == "zero":
        return np.zeros_like(u)
    if spec.family == "fisher_kpp":
        return spec.a - 2.0 * spec.b * u
    dcoef = [i * c for i, c in enumerate(spec.coefficients)][1:]
    out = np.zeros_like(u)
    for c in reversed(dcoef):
        out = out * u + c
    return out


def eval_initial(spec: InitialDataSpec, x):
    """v0(x), zero outside [-h0, h0]."""
    x = np.asarray(x, dtype=float)
    h0 = spec.h0
    xa = np.abs(x)  # built-ins are even; evaluating |x| makes that exact
    inside = xa < h0
    out = np.zeros_like(x)
    if spec.family == "quadratic_bump":
        out = np.where(inside, spec.V * (1.0 - (xa / h0) ** 2), 0.0)
    elif spec.family == "cosine_bump":
        out = np.where(inside, spec.V * np.cos(0.5 * np.pi * xa / h0), 0.0)
    elif spec.family == "custom_table":
        if spec.table is None:
            raise ValueError("custom_table initial data requires a table")
        out = np.where(inside, np.interp(x, spec.table[:, 0], spec.table[:, 1]), 0.0)
    else:
        raise ValueError(f"unknown initial family: {spec.family!r}")
    if out.ndim == 0:
        return float(out)
    return out


def _find_reaction_bound(spec: ReactionSpec, violations: list[str]) -> float:
    """Smallest sampled K with f <= 0 above K; appends an (f2) violation if none."""
    if spec.family == "zero":
        return 0.0
    if spec.family == "fisher_kpp":
        if spec.b <= 0.0:
            violations.append("(f2): fisher_kpp requires b > 0")
            return 0.0
        return spec.a / spec.b if spec.a > 0.0 else 0.0
    coeffs = spec.coefficients
    if not any(c != 0.0 for c in coeffs):
        return 0.0
    lead = coeffs[-1]
    scale = 1.0 + max(abs(c) for c in coeffs) / abs(lead) if lead != 0.0 else 1.0
    u = np.linspace(1e-9, 10.0 * scale, 4096)
    f = eval_reaction(spec, 0.0, 0.0, u)
    nonpos_from = np.where(f > 0.0)[0]
    if lead >= 0.0 and abs(sum(coeffs)) > 0:
        # Positive leading coefficient drives f to +infinity.
        if eval_reaction(spec, 0.0, 0.0, 10.0 * scale) > 0.0:
            violations.append("(f2): no K found with f <= 0 for u > K")
            return float("inf")
    if nonpos_from.size == 0:
        return 0.0
    return float(u[nonpos_from[-1]])


def _initial_slopes(spec: InitialDataSpec) -> tuple[float, float]:
    """One-sided |v0'| at -h0 and +h0 (analytic for built-ins)."""
    h0 = spec.h0
    if spec.family == "quadratic_bump":
        s = 2.0 * abs(spec.V) / h0
        return s, s
    if spec.family == "cosine_bump":
        s = 0.5 * np.pi * abs(spec.V) / h0
        return s, s
    dx = 1e-4 * h0
    left = abs(eval_initial(spec, -h0 + dx) - eval_initial(spec, -h0)) / dx
    right = abs(eval_initial(spec, h0) - eval_initial(spec, h0 - dx)) / dx
    return left, right


def validate(config: ProblemConfig) -> ValidatedConfig:
    """Check every admissibility hypothesis; collect violations by rule id."""
    violations: list[str] = []
    for name in ("d", "mu", "h0", "T"):
        if getattr(config, name) <= 0.0:
            violations.append(f"(config): {name} must be positive")
    if abs(config.initial.h0 - config.h0) > 1e-14 * max(1.0, config.h0):
        violations.append("(config): initial.h0 differs from problem h0")

    reaction = config.reaction
    if reaction.family not in REACTION_FAMILIES:
        violations.append(f"(config): unknown reaction family {reaction.family!r}")
        return ValidatedConfig(config=config, violations=tuple(violations))
    if reaction.family == "custom_polynomial" and reaction.coefficients:
        if reaction.coefficients[0] != 0.0:
            violations.append("(f1): f(t,x,0) != 0")

    initial = config.initial
    if initial.family not in INITIAL_FAMILIES:
        violations.append(f"(config): unknown initial family {initial.family!r}")
        return ValidatedConfig(config=config, violations=tuple(violations))
    if initial.family == "custom_table":
        if initial.table is None:
            violations.append("(config): custom_table initial data requires a table")
            return ValidatedConfig(config=config, violations=tuple(violations))
        for endpoint in (-config.h0, config.h0):
            if abs(np.interp(endpoint, initial.table[:, 0], initial.table[:, 1])) > 1e-10:
                violations.append("(1.2a): v0(+-h0) != 0")
                break

    if config.h0 > 0.0:
        xs = np.linspace(-config.h0, config.h0, 513)[1:-1]
        v0 = eval_initial(initial, xs)
        if np.any(v0 <= 0.0):
            violations.append("(1.2a): v0 not positive on (-h0, h0)")
        sup_v0 = float(np.max(v0)) if v0.size else 0.0
        sl, sr = _initial_slopes(initial)
        if min(sl, sr) <= 1e-6:
            violations.append("(1.2a): v0 has vanishing one-sided slope at +-h0")
    else:
        sup_v0 = 0.0

    K = _find_reaction_bound(reaction, violations)
    u_cap = 1.1 * max(K if np.isfinite(K) else 0.0, sup_v0) + 1.0
    u = np.linspace(0.0, u_cap, 4096)
    L0 = float(np.max(np.abs(_reaction_derivative(reaction, u))))
    if reaction.lipschitz_bound_hint is not None:
        L0 = max(L0, reaction.lipschitz_bound_hint)

    return ValidatedConfig(
        config=config,
        K=K,
        L0=L0,
        sup_v0=sup_v0,
        violations=tuple(violations),
    )


def require_valid(validated: ValidatedConfig) -> ValidatedConfig:
    if not validated.ok:
        raise ValueError("inadmissible config: " + "; ".join(validated.violations))
    return validated


# -- config file round trip (dotted key = value lines) -----------------------

_CONFIG_KEYS = ("d", "mu", "h0", "T")


def save_config(config: ProblemConfig, path) -> None:
    """Write the config as dotted key-value lines (built-in families only)."""
    lines = [f"{k} = {getattr(config, k):.17g}" for k in _CONFIG_KEYS]
    r = config.reaction
    lines.append(f"reaction.family = {r.family}")
    if r.family == "fisher_kpp":
        lines.append(f"reaction.a = {r.a:.17g}")
        lines.append(f"reaction.b = {r.b:.17g}")
    elif r.family == "custom_polynomial":
        lines.append("reaction.coefficients = " + ",".join(f"{c:.17g}" for c in r.coefficients))
    i = config.initial
    if i.family == "custom_table":
        raise ValueError("custom_table initial data cannot be serialized to a config file")
    lines.append(f"initial.family = {i.family}")
    lines.append(f"initial.V = {i.V:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_config(path) -> ProblemConfig:
    """Parse a dotted key-value config file written by :func:`save_config`."""
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            entries[key] = value

    def pop_float(key, default=None):
        if key in entries:
            return float(entries.pop(key))
        if default is None:
            raise ValueError(f"config missing required key {key!r}")
        return default

    d = pop_float("d")
    mu = pop_float("mu")
    h0 = pop_float("h0")
    T = pop_float("T")
    rfam = entries.pop("reaction.family", "zero")
    if rfam == "custom_polynomial":
        raw = entries.pop("reaction.coefficients", "")
        coeffs = tuple(float(c) for c in raw.split(",") if c.strip())
        reaction = ReactionSpec(family=rfam, coefficients=coeffs)
    else:
        reaction = ReactionSpec(
            family=rfam,
            a=pop_float("reaction.a", 1.0),
            b=pop_float("reaction.b", 1.0),
        )
    initial = InitialDataSpec(
        family=entries.pop("initial.family", "quadratic_bump"),
        V=pop_float("initial.V", 1.0),
        h0=h0,
    )
    if entries:
        raise ValueError(f"unknown config keys: {sorted(entries)}")
    return ProblemConfig(d=d, mu=mu, h0=h0, T=T, reaction=reaction, initial=initial)


def symmetric_stefan(T: float = 1.0, V: float = 1.0) -> ProblemConfig:
    """The reference spreading setup: d = mu = h0 = 1, f = 0, quadratic bump."""
    return ProblemConfig(
        d=1.0,
        mu=1.0,
        h0=1.0,
        T=T,
        reaction=ReactionSpec(family="zero"),
        initial=InitialDataSpec(family="quadratic_bump", V=V, h0=1.0),
    )


def fisher_kpp_config(T: float = 1.0, a: float = 1.0, b: float = 1.0) -> ProblemConfig:
    """Logistic growth on the same symmetric initial bump."""
    return ProblemConfig(
        d=1.0,
        mu=1.0,
        h0=1.0,
        T=T,
        reaction=ReactionSpec(family="fisher_kpp", a=a, b=b),
        initial=InitialDataSpec(family="quadratic_bump", V=1.0, h0=1.0),
    )


def with_horizon(config: ProblemConfig, T: float) -> ProblemConfig:
    return replace(config, T=T)
