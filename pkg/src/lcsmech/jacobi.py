"""Jacobi bracket of phase functions on an l.c.s. cotangent bundle.

The bracket is ``{f, g} = Ω_θ(X_f, X_g)``.  Expanding with the package's sign
convention gives

    {f, g} = Λ(df, dg) + f Z(g) - g Z(f),      Λ(μ, ν) = Ω_θ(sharp μ, sharp ν)

with ``Z`` the Lee field, so the curl vector of the bracket is ``E = +Z``.
The bracket is not a derivation: ``{f, gk} - g{f, k} - k{f, g} = g k Z(f)``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .expr import as_expr, eval_jet, mul
from .jet import Jet
from .lcs import (
    Chart,
    ConsistencyError,
    LcsModel,
    hamiltonian_vf_of,
    lee_vf,
    local_data,
    omega_theta_at,
    sharp,
)

__all__ = [
    "bivector",
    "bivector_matrix",
    "sharp_lambda",
    "jacobi_bracket",
    "bracket_expansion",
    "bracket_jet",
    "jacobi_identity_residual",
    "leibniz_defect",
    "local_bracket",
    "commutation_matrix",
    "bracket_values",
]


def bivector(m: LcsModel, z, mu, nu) -> float:
    """``Λ(μ, ν) = Ω_θ(sharp μ, sharp ν)``."""
    big_m = omega_theta_at(m, z)
    return float(sharp(m, z, mu) @ big_m @ sharp(m, z, nu))


def bivector_matrix(m: LcsModel, z) -> np.ndarray:
    """``P[a, b] = Λ(e^a, e^b)`` on coordinate covectors."""
    d = 2 * m.n
    s = np.column_stack([sharp(m, z, e) for e in np.eye(d)])
    return s.T @ omega_theta_at(m, z) @ s


def sharp_lambda(m: LcsModel, z, mu) -> np.ndarray:
    """The vector ``v`` with ``ν(v) = Λ(μ, ν)`` for every covector ν."""
    return bivector_matrix(m, z).T @ np.asarray(mu, dtype=float)


def _formula(fv, df, gv, dg, lee, p):
    """Closed-form ``{f, g}`` from values and differentials.

    Works on floats or jets, so differentiating it gives brackets of brackets.
    """
    n = len(lee)
    # X_g = sharp(dg - gθ) = (dg_p, -(dg_q - g ϑ) - A dg_p)
    cq = [dg[i] - gv * lee[i] for i in range(n)]
    cp = [dg[n + i] for i in range(n)]
    total = 0.0
    for i in range(n):
        a_cp = 0.0
        for j in range(n):
            if i != j:
                a_cp = a_cp + (lee[i] * p[j] - lee[j] * p[i]) * cp[j]
        total = total + (df[i] - fv * lee[i]) * cp[i] - df[n + i] * (cq[i] + a_cp)
    return total


def _scale(*vals) -> float:
    return 1.0 + max(float(np.max(np.abs(v), initial=0.0)) for v in vals)


def bracket_expansion(m: LcsModel, f, g, z) -> float:
    """``Λ(df, dg) + f Z(g) - g Z(f)``."""
    env = m.env(m.require(z))
    jf = eval_jet(as_expr(f), env, m.phase_coords, 1)
    jg = eval_jet(as_expr(g), env, m.phase_coords, 1)
    zl = lee_vf(m, z)
    return bivector(m, z, jf.grad, jg.grad) + jf.value * (jg.grad @ zl) - jg.value * (jf.grad @ zl)


def jacobi_bracket(m: LcsModel, f, g, z) -> float:
    """``{f, g} = Ω_θ(X_f, X_g)``, cross-checked against its expansion."""
    f, g = as_expr(f), as_expr(g)
    if f == g:
        m.require(z)
        return 0.0
    xf = hamiltonian_vf_of(m, f, z)
    xg = hamiltonian_vf_of(m, g, z)
    big_m = omega_theta_at(m, z)
    val = float(xf @ big_m @ xg)
    alt = bracket_expansion(m, f, g, z)
    if abs(val - alt) > 1e-10 * _scale(xf, xg, big_m) ** 2:
        raise ConsistencyError(f"bracket formulas disagree: {val!r} vs {alt!r}")
    return val


def bracket_jet(m: LcsModel, f, g, z) -> Jet:
    """``{f, g}`` together with its gradient in the phase coordinates."""
    z = m.require(z)
    env = m.env(z)
    coords = m.phase_coords
    jf = eval_jet(as_expr(f), env, coords, 2)
    jg = eval_jet(as_expr(g), env, coords, 2)
    d = 2 * m.n
    fv, gv = Jet(jf.value, jf.grad), Jet(jg.value, jg.grad)
    df = [Jet(jf.grad[i], jf.hess[i]) for i in range(d)]
    dg = [Jet(jg.grad[i], jg.hess[i]) for i in range(d)]
    lee = [eval_jet(e, env, coords, 1) for e in m.lee]
    p = [Jet.variable(z[m.n + i], m.n + i, d) for i in range(m.n)]
    out = _formula(fv, df, gv, dg, lee, p)
    if not isinstance(out, Jet):
        out = Jet(float(out), np.zeros(d))
    return out


def _nested(m: LcsModel, f, g, k, z) -> float:
    """``{f, {g, k}}`` with the inner bracket differentiated as a jet."""
    env = m.env(z)
    q, p = z[: m.n], z[m.n :]
    jf = eval_jet(as_expr(f), env, m.phase_coords, 1)
    inner = bracket_jet(m, g, k, z)
    return float(_formula(jf.value, jf.grad, inner.value, inner.grad, m.lee_at(q), p))


def jacobi_identity_residual(m: LcsModel, f, g, k, z) -> float:
    """``|{f,{g,k}} + {g,{k,f}} + {k,{f,g}}|`` at ``z``."""
    z = m.require(z)
    f, g, k = as_expr(f), as_expr(g), as_expr(k)
    if f == g == k:
        return 0.0
    return abs(_nested(m, f, g, k, z) + _nested(m, g, k, f, z) + _nested(m, k, f, g, z))


def leibniz_defect(m: LcsModel, f, g, k, z) -> float:
    """``{f, gk} - g{f, k} - k{f, g}``, asserted equal to ``g k Z(f)``."""
    f, g, k = as_expr(f), as_expr(g), as_expr(k)
    z = m.require(z)
    env = m.env(z)
    gv = float(eval_jet(g, env, (), 1).value)
    kv = float(eval_jet(k, env, (), 1).value)
    defect = (
        jacobi_bracket(m, f, mul(g, k), z)
        - gv * jacobi_bracket(m, f, k, z)
        - kv * jacobi_bracket(m, f, g, z)
    )
    zf = float(eval_jet(f, env, m.phase_coords, 1).grad @ lee_vf(m, z))
    expected = gv * kv * zf
    if abs(defect - expected) > 1e-9 * (1.0 + abs(expected) + abs(gv * kv)):
        raise ConsistencyError(f"Leibniz defect {defect!r} differs from g·k·Z(f) = {expected!r}")
    return defect


def _chart_gradient(m: LcsModel, t: np.ndarray, z: np.ndarray, f) -> tuple[float, np.ndarray]:
    j = eval_jet(as_expr(f), m.env(z), m.phase_coords, 1)
    return j.value, t.T @ j.grad


def local_bracket(c: Chart, m: LcsModel, f, g, zn, literal: bool = False) -> float:
    """Jacobi bracket computed from the symplectic chart data.

    With local realisations ``f_α = e^{-σ} f`` the bracket is
    ``e^{σ} {f_α, g_α}_α``, where ``{·,·}_α`` is the Poisson bracket of
    ``ω_α`` computed through a dense inverse.  ``literal=True`` instead
    returns ``e^{-σ} {e^{σ} f_α, e^{σ} g_α}_α``, which drops the Lee-field
    terms and only agrees with the global bracket when ``f Z(g) = g Z(f)``.
    """
    zn = np.asarray(zn, dtype=float)
    f, g = as_expr(f), as_expr(g)
    ld = local_data(c, m, zn)
    if f == g:
        return 0.0
    fv, dfv = _chart_gradient(m, ld.T, ld.z, f)
    gv, dgv = _chart_gradient(m, ld.T, ld.z, g)
    n = m.n
    dsig = np.concatenate([c.sigma_grad(zn[:n]), np.zeros(n)])
    w = math.exp(-ld.sigma)

    def poisson(da, db):
        xa = np.linalg.solve(ld.omega.T, da)
        xb = np.linalg.solve(ld.omega.T, db)
        return float(xa @ ld.omega @ xb)

    if literal:
        return w * poisson(dfv, dgv)
    dfa = w * (dfv - fv * dsig)
    dga = w * (dgv - gv * dsig)
    return poisson(dfa, dga) / w


def commutation_matrix(m: LcsModel, funcs: Sequence, z) -> np.ndarray:
    """Pairwise brackets ``{f_i, f_j}`` at ``z``."""
    k = len(funcs)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            v = jacobi_bracket(m, funcs[i], funcs[j], z)
            out[i, j] = v
            out[j, i] = -v
    return out


def bracket_values(m: LcsModel, z, fv: float, df, gv: float, dg) -> float:
    """``{f, g}`` from values and differentials alone (functions without a formula)."""
    z = m.require(z)
    q, p = z[: m.n], z[m.n :]
    return float(_formula(fv, np.asarray(df, float), gv, np.asarray(dg, float), m.lee_at(q), p))
