"""Locally conformally symplectic structure on a cotangent bundle.

Phase coordinates are ordered ``(q^1..q^n, p_1..p_n)``; the momentum conjugate
to base coordinate ``x`` is named ``p_x``.  Given a closed Lee form ``ϑ`` on
the base, the two-form

    Ω_θ = Σ dq^i ∧ dp_i + θ ∧ Θ_Q,      θ = π*ϑ,  Θ_Q = Σ p_i dq^i

has matrix ``M = [[A, I], [-I, 0]]`` with ``A_ij = ϑ_i p_j - ϑ_j p_i``.

Sign convention (used everywhere in the package): ``flat(X) = Ω(X, ·) = Mᵀ X``
and ``sharp`` is its inverse.  The Hamiltonian field solves
``flat(X_h) = dh - hθ``, so ``X_h = sharp(dh) - h·Z`` with ``Z = sharp(θ)``
the Lee field.  In coordinates::

    q̇ = ∂h/∂p
    ṗ = -∂h/∂q - A ∂h/∂p + h ϑ
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .expr import (
    Expr,
    Var,
    as_expr,
    eval_jet,
    evaluate,
    free_vars,
    mul,
    sub,
    add,
)
from .geometry import OneFormField, TwoFormField, ext_d_oneform, ldr_d1

__all__ = [
    "LcsError",
    "InadmissiblePointError",
    "ConsistencyError",
    "PhasePoint",
    "Chart",
    "LcsModel",
    "LocalData",
    "momentum_name",
    "omega_theta_at",
    "omega_theta_field",
    "flat",
    "sharp",
    "lee_vf",
    "hamiltonian_vf",
    "hamiltonian_vf_of",
    "contraction_field",
    "locally_hamiltonian_residual",
    "to_chart",
    "from_chart",
    "phase_jacobian",
    "local_data",
    "local_vf",
    "transition_scalar",
]


class LcsError(ValueError):
    pass


class InadmissiblePointError(LcsError):
    pass


class ConsistencyError(RuntimeError):
    """An internal cross-check failed; this indicates a bug, not bad input."""


def momentum_name(coord: str) -> str:
    return "p_" + coord


@dataclass(frozen=True)
class PhasePoint:
    q: tuple[float, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if len(self.q) != len(self.p):
            raise ValueError("q and p must have the same length")

    @classmethod
    def from_array(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        n = z.shape[0] // 2
        return cls(tuple(z[:n]), tuple(z[n:]))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.q + self.p)


def _as_array(z) -> np.ndarray:
    if isinstance(z, PhasePoint):
        return z.array
    return np.asarray(z, dtype=float)


@dataclass(frozen=True)
class Chart:
    """Alternative base coordinates with a conformal potential.

    ``fwd`` gives the new coordinates in terms of the model's base
    coordinates, ``bwd`` the reverse.  ``potential`` is ``σ`` with
    ``dσ = ϑ`` on the chart, written in the new coordinates.  ``domain`` is a
    predicate in the new coordinates (admissible iff > 0).
    """

    name: str
    new_coords: tuple[str, ...]
    fwd: tuple[Expr, ...]
    bwd: tuple[Expr, ...]
    potential: Expr
    domain: Expr = field(default_factory=lambda: as_expr("1"))
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "new_coords", tuple(self.new_coords))
        object.__setattr__(self, "fwd", tuple(as_expr(e) for e in self.fwd))
        object.__setattr__(self, "bwd", tuple(as_expr(e) for e in self.bwd))
        object.__setattr__(self, "potential", as_expr(self.potential))
        object.__setattr__(self, "domain", as_expr(self.domain))
        n = len(self.new_coords)
        if len(self.fwd) != n or len(self.bwd) != n:
            raise ValueError(f"chart {self.name!r}: fwd/bwd must have {n} entries")

    @property
    def new_momenta(self) -> tuple[str, ...]:
        return tuple(momentum_name(c) for c in self.new_coords)

    def _env(self, qn) -> dict[str, float]:
        env = dict(self.params)
        env.update(zip(self.new_coords, map(float, qn)))
        return env

    def contains(self, qn) -> bool:
        try:
            return float(evaluate(self.domain, self._env(qn))) > 0.0
        except ValueError:
            return False

    def sigma(self, qn) -> float:
        return float(evaluate(self.potential, self._env(qn)))

    def sigma_grad(self, qn) -> np.ndarray:
        return eval_jet(self.potential, self._env(qn), self.new_coords, 1).grad

    def forward(self, q_old, old_coords: Sequence[str]) -> np.ndarray:
        env = dict(self.params)
        env.update(zip(old_coords, map(float, q_old)))
        return np.array([float(evaluate(e, env)) for e in self.fwd])

    def backward_jets(self, qn, order: int = 1):
        """Old coordinates as jets in the new coordinates."""
        env = self._env(qn)
        return [eval_jet(e, env, self.new_coords, order) for e in self.bwd]


@dataclass(frozen=True)
class LcsModel:
    """Base coordinates, Lee form, Hamiltonian and admissible domain."""

    coords: tuple[str, ...]
    lee: tuple[Expr, ...]
    hamiltonian: Expr
    domain: Expr = field(default_factory=lambda: as_expr("1"))
    params: Mapping[str, float] = field(default_factory=dict)
    charts: tuple[Chart, ...] = ()
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "lee", tuple(as_expr(e) for e in self.lee))
        object.__setattr__(self, "hamiltonian", as_expr(self.hamiltonian))
        object.__setattr__(self, "domain", as_expr(self.domain))
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "charts", tuple(self.charts))
        n = len(self.coords)
        if len(self.lee) != n:
            raise ValueError(f"lee form has {len(self.lee)} coefficients, expected {n}")
        for c in self.coords:
            if c.startswith("p_"):
                raise ValueError(f"base coordinate {c!r} uses the reserved momentum prefix")
        allowed = set(self.phase_coords) | set(self.params)
        for what, e in [("hamiltonian", self.hamiltonian), ("domain", self.domain)]:
            extra = free_vars(e) - allowed
            if extra:
                raise ValueError(f"{what} uses unknown names {sorted(extra)}")
        base = set(self.coords) | set(self.params)
        for e in self.lee:
            extra = free_vars(e) - base
            if extra:
                raise ValueError(f"lee form uses non-base names {sorted(extra)}")

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def momenta(self) -> tuple[str, ...]:
        return tuple(momentum_name(c) for c in self.coords)

    @property
    def phase_coords(self) -> tuple[str, ...]:
        return self.coords + self.momenta

    @property
    def lee_form(self) -> OneFormField:
        """ϑ on the base."""
        return OneFormField(self.coords, self.lee, self.params)

    @property
    def theta(self) -> OneFormField:
        """θ = π*ϑ on phase space."""
        return OneFormField(self.phase_coords, self.lee + (as_expr("0"),) * self.n, self.params)

    @property
    def is_symplectic(self) -> bool:
        return all(not free_vars(e) and float(evaluate(e, {})) == 0.0 for e in self.lee)

    def chart(self, name: str) -> Chart:
        for c in self.charts:
            if c.name == name:
                return c
        raise KeyError(f"model {self.name!r} has no chart {name!r}")

    def env(self, z) -> dict[str, float]:
        z = _as_array(z)
        if z.shape != (2 * self.n,):
            raise ValueError(f"phase point has shape {z.shape}, expected ({2 * self.n},)")
        env = dict(self.params)
        env.update(zip(self.phase_coords, z.tolist()))
        return env

    def admissible(self, z) -> bool:
        try:
            return float(evaluate(self.domain, self.env(z))) > 0.0
        except ValueError:
            return False

    def require(self, z) -> np.ndarray:
        z = _as_array(z)
        if not self.admissible(z):
            raise InadmissiblePointError(f"point {z.tolist()} is outside the domain of {self.name!r}")
        return z

    def h(self, z) -> float:
        return float(evaluate(self.hamiltonian, self.env(z)))

    def dh(self, z) -> np.ndarray:
        return eval_jet(self.hamiltonian, self.env(z), self.phase_coords, 1).grad

    def lee_at(self, q) -> np.ndarray:
        env = dict(self.params)
        env.update(zip(self.coords, map(float, q)))
        return np.array([float(evaluate(e, env)) for e in self.lee])


# pointwise structure -------------------------------------------------------------


def _a_block(lee: np.ndarray, p: np.ndarray) -> np.ndarray:
    lp = np.outer(lee, p)
    return lp - lp.T


def _split(m: LcsModel, z):
    z = m.require(z)
    n = m.n
    return z, z[:n], z[n:]


def omega_theta_at(m: LcsModel, z) -> np.ndarray:
    """Matrix of Ω_θ at ``z`` in the ordering (q, p)."""
    z, q, p = _split(m, z)
    return _omega_matrix(_a_block(m.lee_at(q), p))


def _omega_matrix(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    eye = np.eye(n)
    return np.block([[a, eye], [-eye, np.zeros((n, n))]])


def omega_theta_field(m: LcsModel) -> TwoFormField:
    """Ω_θ as an expression field on phase space (for derivative checks)."""
    n = m.n
    ent = {}
    for i in range(n):
        for j in range(i + 1, n):
            ent[(i, j)] = sub(
                mul(m.lee[i], Var(m.momenta[j])), mul(m.lee[j], Var(m.momenta[i]))
            )
        ent[(i, n + i)] = as_expr("1")
    return TwoFormField(m.phase_coords, ent, m.params)


def flat(m: LcsModel, z, X) -> np.ndarray:
    """``ι_X Ω_θ``, i.e. the covector ``v ↦ Ω_θ(X, v)``."""
    return omega_theta_at(m, z).T @ np.asarray(X, dtype=float)


def _sharp_block(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    cq, cp = c[:n], c[n:]
    return np.concatenate([cp, -cq - a @ cp])


def _check_sharp(a: np.ndarray, c: np.ndarray, x: np.ndarray) -> None:
    res = _omega_matrix(a).T @ x - c
    scale = 1.0 + np.max(np.abs(c), initial=0.0) * (1.0 + np.max(np.abs(a), initial=0.0))
    if np.max(np.abs(res), initial=0.0) > 1e-12 * scale:
        raise ConsistencyError(f"sharp residual {np.max(np.abs(res)):.3e} exceeds tolerance")


def sharp(m: LcsModel, z, c) -> np.ndarray:
    """Inverse of :func:`flat`, via the closed-form block inverse of Ω_θ."""
    z, q, p = _split(m, z)
    c = np.asarray(c, dtype=float)
    a = _a_block(m.lee_at(q), p)
    x = _sharp_block(a, c)
    _check_sharp(a, c, x)
    return x


def lee_vf(m: LcsModel, z) -> np.ndarray:
    """Lee field ``Z = sharp(θ)``; in coordinates ``(0, -ϑ)``."""
    z, q, p = _split(m, z)
    theta = np.concatenate([m.lee_at(q), np.zeros(m.n)])
    return sharp(m, z, theta)


def hamiltonian_vf_of(m: LcsModel, f, z) -> np.ndarray:
    """Hamiltonian field of an arbitrary phase function ``f`` (expression)."""
    f = as_expr(f)
    z, q, p = _split(m, z)
    jf = eval_jet(f, m.env(z), m.phase_coords, 1)
    lee = m.lee_at(q)
    a = _a_block(lee, p)
    theta = np.concatenate([lee, np.zeros(m.n)])
    target = jf.grad - jf.value * theta
    x = _sharp_block(a, target)
    _check_sharp(a, target, x)
    alt = _sharp_block(a, jf.grad) - jf.value * _sharp_block(a, theta)
    scale = 1.0 + np.max(np.abs(x), initial=0.0)
    if np.max(np.abs(x - alt)) > 1e-10 * scale:
        raise ConsistencyError("sharp(dh) - h·Z disagrees with sharp(dh - hθ)")
    return x


def hamiltonian_vf(m: LcsModel, z) -> np.ndarray:
    """The field ``X_h`` with ``ι_{X_h} Ω_θ = dh - hθ``."""
    return hamiltonian_vf_of(m, m.hamiltonian, z)


def contraction_field(m: LcsModel, X: Sequence) -> OneFormField:
    """``ι_X Ω_θ`` as a one-form field, for a vector field given by 2n expressions."""
    X = [as_expr(e) for e in X]
    n = m.n
    if len(X) != 2 * n:
        raise ValueError(f"vector field needs {2 * n} components")
    om = omega_theta_field(m)

    def entry(i, j):
        if i == j:
            return as_expr("0")
        if i < j:
            return om.entries.get((i, j), as_expr("0"))
        e = om.entries.get((j, i))
        return as_expr("0") if e is None else mul("-1", e)

    comps = []
    for j in range(2 * n):
        acc = as_expr("0")
        for i in range(2 * n):
            acc = add(acc, mul(X[i], entry(i, j)))
        comps.append(acc)
    return OneFormField(m.phase_coords, tuple(comps), m.params)


def locally_hamiltonian_residual(m: LcsModel, X: Sequence, z) -> float:
    """``‖d_θ(ι_X Ω_θ)‖∞`` at ``z``; zero for locally Hamiltonian fields."""
    z = m.require(z)
    return float(np.max(np.abs(ldr_d1(contraction_field(m, X), m.theta, z))))


# charts ----------------------------------------------------------------------------


def _bwd_jacobian(c: Chart, qn) -> tuple[np.ndarray, np.ndarray]:
    jets = c.backward_jets(qn, order=1)
    q_old = np.array([j.value for j in jets])
    jac = np.array([j.grad for j in jets])  # jac[i, k] = ∂q_i/∂q'_k
    return q_old, jac


def _check_jacobian(jac: np.ndarray, chart: Chart) -> None:
    if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > 1e12:
        raise LcsError(f"chart {chart.name!r}: singular coordinate Jacobian")


def to_chart(c: Chart, m: LcsModel, z) -> np.ndarray:
    """Model phase point -> chart phase point (cotangent lift ``p' = Jᵀ p``)."""
    z, q, p = _split(m, z)
    qn = c.forward(q, m.coords)
    if not c.contains(qn):
        raise InadmissiblePointError(f"point {q.tolist()} is outside chart {c.name!r}")
    _, jac = _bwd_jacobian(c, qn)
    _check_jacobian(jac, c)
    return np.concatenate([qn, jac.T @ p])


def from_chart(c: Chart, m: LcsModel, zn) -> np.ndarray:
    """Chart phase point -> model phase point (``p = J⁻ᵀ p'``)."""
    zn = np.asarray(zn, dtype=float)
    n = m.n
    qn, pn = zn[:n], zn[n:]
    if not c.contains(qn):
        raise InadmissiblePointError(f"point {qn.tolist()} is outside chart {c.name!r}")
    q_old, jac = _bwd_jacobian(c, qn)
    _check_jacobian(jac, c)
    return np.concatenate([q_old, np.linalg.solve(jac.T, pn)])


def phase_jacobian(c: Chart, m: LcsModel, zn) -> np.ndarray:
    """``T = ∂z/∂z'`` of :func:`from_chart` at the chart point ``zn``."""
    zn = np.asarray(zn, dtype=float)
    n = m.n
    qn = zn[:n]
    jets = c.backward_jets(qn, order=2)
    jac = np.array([j.grad for j in jets])
    _check_jacobian(jac, c)
    z = from_chart(c, m, zn)
    p = z[n:]
    jinv_t = np.linalg.inv(jac).T
    # ∂p/∂q'_k = -J⁻ᵀ (∂_k J)ᵀ p,  (∂_k J)[i, l] = ∂²q_i/∂q'_l∂q'_k
    hess = np.array([j.hess for j in jets])  # hess[i, l, k]
    v = np.einsum("ilk,i->lk", hess, p)
    dp_dq = -jinv_t @ v
    t = np.zeros((2 * n, 2 * n))
    t[:n, :n] = jac
    t[n:, :n] = dp_dq
    t[n:, n:] = jinv_t
    return t


def chart_lee(c: Chart, m: LcsModel, qn) -> np.ndarray:
    """ϑ pulled back to chart coordinates at ``qn``."""
    q_old, jac = _bwd_jacobian(c, qn)
    return jac.T @ m.lee_at(q_old)


@dataclass(frozen=True)
class LocalData:
    """Conformal local data of a chart at one point.

    ``omega`` is ``ω_α = e^{-σ}·Ω_θ`` in chart coordinates, ``h`` is
    ``h_α = e^{-σ} h``, ``dh`` its differential and ``X`` the local Hamilton
    field solving ``ι_X ω_α = dh_α``.  ``omega_global`` is Ω_θ itself in chart
    coordinates and ``T`` the phase Jacobian of the chart map.
    """

    sigma: float
    omega: np.ndarray
    omega_global: np.ndarray
    h: float
    dh: np.ndarray
    X: np.ndarray
    T: np.ndarray
    z: np.ndarray


def local_data(c: Chart, m: LcsModel, zn) -> LocalData:
    zn = np.asarray(zn, dtype=float)
    n = m.n
    z = m.require(from_chart(c, m, zn))
    t = phase_jacobian(c, m, zn)
    big_m = omega_theta_at(m, z)
    pulled = t.T @ big_m @ t
    # the same form from the block formula with the chart's own Lee form and momenta
    block = _omega_matrix(_a_block(chart_lee(c, m, zn[:n]), zn[n:]))
    scale = 1.0 + np.max(np.abs(block))
    if np.max(np.abs(pulled - block)) > 1e-9 * scale:
        raise ConsistencyError(f"chart {c.name!r}: pulled-back Ω_θ disagrees with block formula")
    pulled = 0.5 * (pulled - pulled.T)
    sig = c.sigma(zn[:n])
    w = math.exp(-sig)
    omega = w * pulled
    hv = m.h(z)
    dsig = np.concatenate([c.sigma_grad(zn[:n]), np.zeros(n)])
    dh_loc = w * (t.T @ m.dh(z) - hv * dsig)
    x_loc = np.linalg.solve(omega.T, dh_loc)
    return LocalData(sig, omega, pulled, w * hv, dh_loc, x_loc, t, z)


def local_vf(c: Chart, m: LcsModel, zn) -> np.ndarray:
    """Local Hamilton field ``X_α`` at a chart point."""
    return local_data(c, m, zn).X


def transition_scalar(ca: Chart, cb: Chart, m: LcsModel, q) -> float:
    """``λ_βα = exp(σ_α - σ_β)`` at the base point ``q`` (model coordinates)."""
    q = np.asarray(q, dtype=float)
    qa = ca.forward(q, m.coords)
    qb = cb.forward(q, m.coords)
    if not ca.contains(qa):
        raise InadmissiblePointError(f"point {q.tolist()} is outside chart {ca.name!r}")
    if not cb.contains(qb):
        raise InadmissiblePointError(f"point {q.tolist()} is outside chart {cb.name!r}")
    return math.exp(ca.sigma(qa) - cb.sigma(qb))
