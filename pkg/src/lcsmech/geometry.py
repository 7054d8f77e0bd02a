"""Pointwise differential forms on a coordinate chart.

Forms are dense arrays indexed by coordinate position.  Components follow the
evaluation convention: for a two-form ``M[i, j] = ω(∂_i, ∂_j)`` and for a
three-form ``T[i, j, k] = ω(∂_i, ∂_j, ∂_k)``.  With this convention

* ``(dα)[i, j] = ∂_i α_j - ∂_j α_i``
* ``(dω)[i, j, k] = ∂_i ω_jk + ∂_j ω_ki + ∂_k ω_ij``
* ``(a ∧ b)[i, j] = a_i b_j - a_j b_i``
* ``(a ∧ ω)[i, j, k] = a_i ω_jk + a_j ω_ki + a_k ω_ij``

The twisted (Lichnerowicz-deRham) differential is ``d_θ β = dβ - θ ∧ β``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .expr import Expr, as_expr, eval_jet, evaluate, free_vars

__all__ = [
    "OneFormField",
    "TwoFormField",
    "ext_d_oneform",
    "wedge_11",
    "wedge_12",
    "ldr_d0",
    "ldr_d1",
    "ldr_d2",
    "is_antisymmetric",
]


def _env(coords: Sequence[str], x, params: Mapping[str, float]) -> dict[str, float]:
    x = np.asarray(x, dtype=float)
    if x.shape != (len(coords),):
        raise ValueError(f"point has shape {x.shape}, expected ({len(coords)},)")
    env = dict(params)
    env.update(zip(coords, x.tolist()))
    return env


@dataclass(frozen=True)
class OneFormField:
    """A one-form ``Σ coeffs[i] dx^i`` with expression coefficients."""

    coords: tuple[str, ...]
    coeffs: tuple[Expr, ...]
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "coeffs", tuple(as_expr(c) for c in self.coeffs))
        if len(self.coeffs) != len(self.coords):
            raise ValueError(
                f"{len(self.coeffs)} coefficients for {len(self.coords)} coordinates"
            )
        allowed = set(self.coords) | set(self.params)
        for c in self.coeffs:
            extra = free_vars(c) - allowed
            if extra:
                raise ValueError(f"coefficient uses unknown names {sorted(extra)}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @classmethod
    def zero(cls, coords: Sequence[str]) -> "OneFormField":
        return cls(tuple(coords), tuple("0" for _ in coords))

    def at(self, x) -> np.ndarray:
        env = _env(self.coords, x, self.params)
        return np.array([float(evaluate(c, env)) for c in self.coeffs])

    def jacobian(self, x) -> np.ndarray:
        """``D[j, i] = ∂_i α_j``."""
        env = _env(self.coords, x, self.params)
        return np.array([eval_jet(c, env, self.coords, 1).grad for c in self.coeffs])


@dataclass(frozen=True)
class TwoFormField:
    """A two-form field given by its upper-triangular entry expressions.

    ``entries[(i, j)]`` for ``i < j`` holds ``ω(∂_i, ∂_j)``; missing entries are zero.
    The lower triangle is filled by antisymmetry.
    """

    coords: tuple[str, ...]
    entries: Mapping[tuple[int, int], Expr]
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        d = len(self.coords)
        clean = {}
        for (i, j), e in self.entries.items():
            if not (0 <= i < j < d):
                raise ValueError(f"entry ({i}, {j}) is not strictly upper-triangular")
            clean[(i, j)] = as_expr(e)
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_matrix(cls, coords, mat, params=None) -> "TwoFormField":
        """Build from a full matrix of expressions; only the upper triangle is read."""
        d = len(coords)
        ent = {(i, j): mat[i][j] for i in range(d) for j in range(i + 1, d)}
        return cls(tuple(coords), ent, dict(params or {}))

    def at(self, x) -> np.ndarray:
        env = _env(self.coords, x, self.params)
        d = len(self.coords)
        m = np.zeros((d, d))
        for (i, j), e in self.entries.items():
            v = float(evaluate(e, env))
            m[i, j] = v
            m[j, i] = -v
        return m

    def derivatives(self, x) -> np.ndarray:
        """``G[k, i, j] = ∂_k ω_ij``."""
        env = _env(self.coords, x, self.params)
        d = len(self.coords)
        g = np.zeros((d, d, d))
        for (i, j), e in self.entries.items():
            gr = eval_jet(e, env, self.coords, 1).grad
            g[:, i, j] = gr
            g[:, j, i] = -gr
        return g


def is_antisymmetric(t: np.ndarray, tol: float = 0.0) -> bool:
    """Check antisymmetry under every transposition of adjacent indices."""
    for ax in range(t.ndim - 1):
        perm = list(range(t.ndim))
        perm[ax], perm[ax + 1] = perm[ax + 1], perm[ax]
        if np.max(np.abs(t + np.transpose(t, perm)), initial=0.0) > tol:
            return False
    return True


def wedge_11(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    ab = np.outer(a, b)
    return ab - ab.T


def wedge_12(a, m) -> np.ndarray:
    """Wedge of a covector with a two-form."""
    a = np.asarray(a, dtype=float)
    m = np.asarray(m, dtype=float)
    if m.shape != (a.shape[0], a.shape[0]):
        raise ValueError(f"dimension mismatch: {a.shape} vs {m.shape}")
    t = np.einsum("i,jk->ijk", a, m)
    return _cyclic(t)


def _cyclic(t: np.ndarray) -> np.ndarray:
    # T_ijk + T_jki + T_kij: totally antisymmetric when T is antisymmetric in its last pair
    return t + np.transpose(t, (2, 0, 1)) + np.transpose(t, (1, 2, 0))


def ext_d_oneform(alpha: OneFormField, x) -> np.ndarray:
    d = alpha.jacobian(x)
    return d.T - d


def ldr_d0(f, theta: OneFormField, x, params: Mapping[str, float] | None = None) -> np.ndarray:
    """``d f - f θ`` at ``x``."""
    f = as_expr(f)
    env = _env(theta.coords, x, {**theta.params, **(params or {})})
    j = eval_jet(f, env, theta.coords, 1)
    return j.grad - j.value * theta.at(x)


def ldr_d1(alpha: OneFormField, theta: OneFormField, x) -> np.ndarray:
    """``dα - θ ∧ α`` at ``x``."""
    _same_chart(alpha.coords, theta.coords)
    return ext_d_oneform(alpha, x) - wedge_11(theta.at(x), alpha.at(x))


def ldr_d2(omega: TwoFormField, theta: OneFormField, x) -> np.ndarray:
    """``dω - θ ∧ ω`` at ``x``."""
    _same_chart(omega.coords, theta.coords)
    dw = _cyclic(omega.derivatives(x))
    return dw - wedge_12(theta.at(x), omega.at(x))


def _same_chart(a: Sequence[str], b: Sequence[str]) -> None:
    if tuple(a) != tuple(b):
        raise ValueError(f"forms live on different charts: {tuple(a)} vs {tuple(b)}")
