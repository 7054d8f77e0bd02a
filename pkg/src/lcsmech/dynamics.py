"""Time integration of Hamiltonian flows and trajectory diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .expr import ExprDomainError, as_expr, evaluate
from .lcs import (
    Chart,
    InadmissiblePointError,
    LcsModel,
    flat,
    from_chart,
    hamiltonian_vf,
    local_vf,
)

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "integrate",
    "integrate_phase",
    "integrate_local",
    "integrate_base",
    "defining_residual",
    "Diagnostics",
    "diagnostics",
    "compare",
    "write_csv",
    "csv_header",
]


class IntegrationError(RuntimeError):
    """Non-finite state or step budget exhausted; ``partial`` holds the accepted steps."""

    def __init__(self, message: str, partial: "Trajectory"):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    method: str = "rk4"
    dt: float = 1e-3
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not (self.dt > 0 and self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("step size and tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)
    exit_time: Optional[float] = None  # set when the flow left the domain

    @property
    def completed(self) -> bool:
        return self.exit_time is None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.times)


# Dormand-Prince 5(4)
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


class _DomainExit(Exception):
    pass


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _dp_step(f, y, h, k1):
    ks = [k1]
    for s in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_DP_A[s], ks))
        ks.append(f(yi))
    k = np.array(ks)
    y5 = y + h * (_DP_B5 @ k)
    err = h * ((_DP_B5 - _DP_B4) @ k)
    return y5, err, ks[-1]


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0,
    cfg: IntegratorConfig,
    admissible: Callable[[np.ndarray], bool] = lambda y: True,
    meta: Optional[dict] = None,
) -> Trajectory:
    """Integrate ``y' = rhs(y)`` from ``t = 0`` to ``cfg.t_end``.

    If a state (or a stage evaluation) leaves the admissible set, the run is
    truncated at the last admissible state and ``exit_time`` is set.
    """
    y = np.asarray(y0, dtype=float).copy()
    if not admissible(y):
        raise InadmissiblePointError(f"initial state {y.tolist()} is not admissible")
    times = [0.0]
    states = [y.copy()]
    meta = dict(meta or {})

    def f(v):
        try:
            out = rhs(v)
        except InadmissiblePointError as exc:
            raise _DomainExit() from exc
        except (ExprDomainError, ArithmeticError) as exc:
            raise IntegrationError(f"right-hand side undefined: {exc}", result()) from exc
        return np.asarray(out, dtype=float)

    def result(exit_time=None):
        return Trajectory(np.array(times), np.array(states), meta, exit_time)

    def accept(t_new, y_new):
        if not np.all(np.isfinite(y_new)):
            raise IntegrationError(f"non-finite state at t = {t_new!r}", result())
        if not admissible(y_new):
            raise _DomainExit()
        times.append(t_new)
        states.append(y_new.copy())

    t = 0.0
    steps = 0
    try:
        if cfg.method == "rk4":
            nsteps = max(1, int(math.ceil(cfg.t_end / cfg.dt - 1e-9)))
            if nsteps > cfg.max_steps:
                raise IntegrationError(
                    f"{nsteps} steps needed, max_steps is {cfg.max_steps}", result()
                )
            for i in range(1, nsteps + 1):
                t_new = cfg.t_end if i == nsteps else i * cfg.dt
                y = _rk4_step(f, y, t_new - t)
                accept(t_new, y)
                t = t_new
        else:
            k1 = f(y)
            h = _initial_step(f, y, k1, cfg)
            while t < cfg.t_end:
                if steps >= cfg.max_steps:
                    raise IntegrationError(f"max_steps {cfg.max_steps} exhausted at t = {t!r}", result())
                steps += 1
                h = min(h, cfg.t_end - t)
                y_new, err, k_last = _dp_step(f, y, h, k1)
                scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
                en = float(np.max(np.abs(err) / scale))
                if en <= 1.0:
                    t_new = cfg.t_end if cfg.t_end - (t + h) < 1e-14 * cfg.t_end else t + h
                    accept(t_new, y_new)
                    t, y, k1 = t_new, y_new, k_last
                factor = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** (-0.2)))
                h *= factor
                if h < 1e-14 * cfg.t_end:
                    raise IntegrationError(f"step size underflow at t = {t!r}", result())
    except _DomainExit:
        return result(exit_time=t)
    return result()


def _initial_step(f, y, k1, cfg) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y)
    d0 = float(np.max(np.abs(y) / scale))
    d1 = float(np.max(np.abs(k1) / scale))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h0, cfg.t_end)


def integrate_phase(m: LcsModel, z0, cfg: IntegratorConfig) -> Trajectory:
    """Flow of ``X_h`` in the model's own coordinates."""
    return integrate(
        lambda z: hamiltonian_vf(m, z),
        z0,
        cfg,
        m.admissible,
        {"model": m.name, "chart": "global"},
    )


def integrate_local(c: Chart, m: LcsModel, zn0, cfg: IntegratorConfig) -> Trajectory:
    """Flow of the local Hamilton field ``X_α`` in chart coordinates."""

    def admissible(zn):
        n = m.n
        if not c.contains(zn[:n]):
            return False
        try:
            return m.admissible(from_chart(c, m, zn))
        except (ValueError, np.linalg.LinAlgError):
            return False

    return integrate(lambda zn: local_vf(c, m, zn), zn0, cfg, admissible, {"model": m.name, "chart": c.name})


def integrate_base(
    v,
    q0,
    cfg: IntegratorConfig,
    coords: Sequence[str] = (),
    admissible: Callable[[np.ndarray], bool] = lambda q: True,
    params: Optional[dict] = None,
) -> Trajectory:
    """Flow of a base vector field.

    ``v`` is either a callable ``q -> vector`` or a sequence of expressions in
    ``coords``.
    """
    if not callable(v):
        exprs = [as_expr(e) for e in v]
        params = dict(params or {})

        def rhs(q):
            env = dict(params)
            env.update(zip(coords, q.tolist()))
            return np.array([float(evaluate(e, env)) for e in exprs])

    else:
        rhs = v
    return integrate(rhs, q0, cfg, admissible, {"chart": "base"})


def defining_residual(m: LcsModel, z, X=None) -> float:
    """``‖ι_X Ω_θ - (dh - hθ)‖∞`` with ``X = X_h(z)`` unless given."""
    z = np.asarray(z, dtype=float)
    if X is None:
        X = hamiltonian_vf(m, z)
    theta = np.concatenate([m.lee_at(z[: m.n]), np.zeros(m.n)])
    target = m.dh(z) - m.h(z) * theta
    return float(np.max(np.abs(flat(m, z, X) - target)))


@dataclass
class Diagnostics:
    t: np.ndarray
    h: np.ndarray
    residual: np.ndarray
    drift_check: np.ndarray
    dhdt: np.ndarray
    h_theta_x: np.ndarray


def diagnostics(m: LcsModel, traj: Trajectory) -> Diagnostics:
    """Energy, defining-equation residual and the drift law ``dh/dt = h θ(X_h)``."""
    t = traj.times
    hs = np.array([m.h(z) for z in traj.states])
    res = np.empty(len(t))
    htx = np.empty(len(t))
    for i, z in enumerate(traj.states):
        x = hamiltonian_vf(m, z)
        res[i] = defining_residual(m, z, x)
        htx[i] = hs[i] * float(m.lee_at(z[: m.n]) @ x[: m.n])
    if len(t) >= 3:
        dhdt = np.gradient(hs, t, edge_order=2)
    elif len(t) == 2:
        dhdt = np.full(2, (hs[1] - hs[0]) / (t[1] - t[0]))
    else:
        dhdt = np.full(len(t), np.nan)
    return Diagnostics(t, hs, res, np.abs(dhdt - htx), dhdt, htx)


def compare(t1: Trajectory, t2: Trajectory, mapping: Optional[Callable] = None) -> float:
    """Max state distance between two trajectories on a common time grid.

    ``mapping`` (if given) is applied to every state of ``t2`` first, e.g. to
    bring a chart trajectory back to model coordinates.  The denser
    trajectory is interpolated (natural cubic spline per coordinate) onto
    the other one's times inside the overlapping range.
    """
    s2 = t2.states if mapping is None else np.array([mapping(s) for s in t2.states])
    lo = max(t1.times[0], t2.times[0])
    hi = min(t1.times[-1], t2.times[-1])
    if hi < lo:
        raise ValueError("trajectories have disjoint time ranges")
    (ta, sa), (tb, sb) = (t1.times, t1.states), (t2.times, s2)
    if len(ta) < len(tb):
        (ta, sa), (tb, sb) = (tb, sb), (ta, sa)
    # ta/sa is the denser one
    grid_mask = (tb >= lo - 1e-12) & (tb <= hi + 1e-12)
    grid = tb[grid_mask]
    if len(ta) == len(tb) and np.array_equal(ta, tb):
        return float(np.max(np.abs(sa - sb), initial=0.0))
    if len(ta) < 2:
        return float(np.max(np.abs(sa[0] - sb[0])))
    spline = CubicSpline(ta, sa, axis=0, bc_type="natural")
    return float(np.max(np.abs(spline(np.clip(grid, ta[0], ta[-1])) - sb[grid_mask]), initial=0.0))


def csv_header(m: LcsModel) -> list[str]:
    return ["t", *m.coords, *m.momenta, "h", "residual"]


def write_csv(m: LcsModel, traj: Optional[Trajectory], path) -> None:
    """Write a model-coordinate trajectory; ``traj=None`` writes the header only."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(m))
        if traj is None:
            return
        for t, z in zip(traj.times, traj.states):
            row = [t, *z, _or_nan(m.h, z), _or_nan(lambda v: defining_residual(m, v), z)]
            w.writerow([format(float(v), ".17g") for v in row])


def _or_nan(fn, z) -> float:
    # near a blow-up the derived columns may not be representable
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return float(fn(z))
    except (ExprDomainError, ArithmeticError):
        return math.nan
