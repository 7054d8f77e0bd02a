"""Hamilton-Jacobi checks for one-form sections and complete solutions.

A section ``γ = Σ γ_i dq^i`` has image ``{(q, γ(q))}``.  For an image that is
Lagrangian (``d_ϑ γ = 0``) the following are equivalent, and both are checked
pointwise:

* relatedness: ``Tγ(X_h^γ) = X_h ∘ γ`` where ``X_h^γ`` is the base projection
  of ``X_h`` along the section;
* the twisted HJ equation ``d_ϑ(h ∘ γ) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.linalg import null_space, subspace_angles

from .expr import Expr, Var, as_expr, eval_jet, evaluate, free_vars, substitute
from .geometry import OneFormField, ldr_d0, ldr_d1
from .jacobi import bracket_values, sharp_lambda
from .jet import Jet
from .lcs import (
    ConsistencyError,
    LcsError,
    LcsModel,
    hamiltonian_vf,
    local_data,
    omega_theta_at,
)

__all__ = [
    "SectionGamma",
    "CompleteSolution",
    "LagrangianPreconditionError",
    "NewtonError",
    "SOLUTION",
    "CONSISTENT_FAILURE",
    "THEOREM_VIOLATION",
    "INCONCLUSIVE",
    "TOL",
    "GAP_HIGH",
    "section_point",
    "lagrangian_residual",
    "projected_vf",
    "relatedness_residual",
    "hj_residual",
    "SampleResult",
    "HJReport",
    "hj_verify",
    "lagrangian_perp_check",
    "CompleteReport",
    "complete_validate",
    "extract_f",
    "commutation_check",
    "lagrangian_perp_subspaces",
    "param_jacobian",
    "chart_section",
    "local_lagrangian_residual",
]

SOLUTION = "SOLUTION"
CONSISTENT_FAILURE = "CONSISTENT-FAILURE"
THEOREM_VIOLATION = "THEOREM-VIOLATION"
INCONCLUSIVE = "INCONCLUSIVE"

TOL = 1e-8
GAP_HIGH = 1e-3


class LagrangianPreconditionError(LcsError):
    pass


class NewtonError(LcsError):
    pass


@dataclass(frozen=True)
class SectionGamma:
    coeffs: tuple[Expr, ...]
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(as_expr(c) for c in self.coeffs))
        object.__setattr__(self, "params", dict(self.params))

    def form(self, m: LcsModel) -> OneFormField:
        if len(self.coeffs) != m.n:
            raise ValueError(f"section has {len(self.coeffs)} coefficients, model needs {m.n}")
        return OneFormField(m.coords, self.coeffs, {**m.params, **self.params})


@dataclass(frozen=True)
class CompleteSolution:
    """``p = Φ(q, λ)`` given by one momentum expression per base coordinate."""

    param_names: tuple[str, ...]
    momenta: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "param_names", tuple(self.param_names))
        object.__setattr__(self, "momenta", tuple(as_expr(e) for e in self.momenta))
        if len(self.param_names) != len(self.momenta):
            raise ValueError("a complete solution needs one parameter per momentum")

    def section(self, lam: Sequence[float]) -> SectionGamma:
        return SectionGamma(self.momenta, dict(zip(self.param_names, map(float, lam))))


# pointwise residuals -------------------------------------------------------------


def _form(m: LcsModel, gamma: SectionGamma | Sequence) -> OneFormField:
    if not isinstance(gamma, SectionGamma):
        gamma = SectionGamma(tuple(gamma))
    return gamma.form(m)


def section_point(m: LcsModel, gamma, q) -> np.ndarray:
    """``γ(q)`` as an admissible phase point."""
    q = np.asarray(q, dtype=float)
    z = np.concatenate([q, _form(m, gamma).at(q)])
    return m.require(z)


def _tangent(form: OneFormField, q) -> np.ndarray:
    """``Tγ`` as a 2n×n matrix with columns ``(e_i, ∂γ/∂q^i)``."""
    n = form.dim
    return np.vstack([np.eye(n), form.jacobian(q)])


def lagrangian_residual(m: LcsModel, gamma, q) -> float:
    """``‖d_ϑ γ‖∞`` at ``q``, cross-checked against ``γ*Ω_θ = -d_ϑ γ``."""
    form = _form(m, gamma)
    q = np.asarray(q, dtype=float)
    z = section_point(m, gamma, q)
    dg = ldr_d1(form, OneFormField(m.coords, m.lee, form.params), q)
    t = _tangent(form, q)
    pulled = t.T @ omega_theta_at(m, z) @ t
    scale = 1.0 + float(np.max(np.abs(t))) ** 2 * (1.0 + float(np.max(np.abs(z))))
    if np.max(np.abs(pulled + dg), initial=0.0) > 1e-9 * scale:
        raise ConsistencyError("pullback γ*Ω_θ disagrees with -d_ϑγ")
    return float(np.max(np.abs(dg), initial=0.0))


def projected_vf(m: LcsModel, gamma, q) -> np.ndarray:
    """``X_h^γ(q)``: the base components of ``X_h`` at ``γ(q)``."""
    z = section_point(m, gamma, q)
    return hamiltonian_vf(m, z)[: m.n]


def relatedness_residual(m: LcsModel, gamma, q) -> float:
    """``‖Tγ(X_h^γ) - X_h(γ(q))‖∞``."""
    form = _form(m, gamma)
    q = np.asarray(q, dtype=float)
    z = section_point(m, gamma, q)
    x = hamiltonian_vf(m, z)
    v = x[: m.n]
    lifted = _tangent(form, q) @ v
    diff = lifted - x
    if np.max(np.abs(diff[: m.n]), initial=0.0) > 1e-12:
        raise ConsistencyError("base block of Tγ(X^γ) - X_h∘γ is not zero")
    return float(np.max(np.abs(diff), initial=0.0))


def _h_on_section(m: LcsModel, form: OneFormField) -> Expr:
    return substitute(m.hamiltonian, dict(zip(m.momenta, form.coeffs)))


def hj_residual(m: LcsModel, gamma, q) -> float:
    """``‖d_ϑ(h∘γ)‖∞``, cross-checked against ``γ*(dh - hθ)``."""
    form = _form(m, gamma)
    q = np.asarray(q, dtype=float)
    z = section_point(m, gamma, q)
    lee = OneFormField(m.coords, m.lee, form.params)
    hg = _h_on_section(m, form)
    lhs = ldr_d0(hg, lee, q)
    theta = np.concatenate([m.lee_at(q), np.zeros(m.n)])
    rhs = _tangent(form, q).T @ (m.dh(z) - m.h(z) * theta)
    scale = 1.0 + float(np.max(np.abs(rhs), initial=0.0))
    if np.max(np.abs(lhs - rhs), initial=0.0) > 1e-9 * scale:
        raise ConsistencyError("d_ϑ(h∘γ) disagrees with γ*(d_θ h)")
    return float(np.max(np.abs(lhs), initial=0.0))


# verification ------------------------------------------------------------------


def _classify(r_hj: float, r_rel: float, tol: float, gap_high: float) -> str:
    small = (r_hj < tol, r_rel < tol)
    large = (r_hj > gap_high, r_rel > gap_high)
    if all(small):
        return SOLUTION
    if (small[0] and large[1]) or (small[1] and large[0]):
        return THEOREM_VIOLATION
    if r_hj >= tol and r_rel >= tol:
        return CONSISTENT_FAILURE if all(large) else INCONCLUSIVE
    return INCONCLUSIVE


@dataclass
class SampleResult:
    q: list[float]
    lagrangian: float
    hj: float
    relatedness: float
    verdict: str


@dataclass
class HJReport:
    samples: list[SampleResult]
    max_lagrangian: float
    max_hj: float
    max_relatedness: float
    verdict: str
    tol: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "tol": self.tol,
            "max_lagrangian": self.max_lagrangian,
            "max_hj": self.max_hj,
            "max_relatedness": self.max_relatedness,
            "inconclusive_samples": sum(s.verdict == INCONCLUSIVE for s in self.samples),
            "samples": [s.__dict__ for s in self.samples],
        }


def hj_verify(
    m: LcsModel,
    gamma,
    samples: Sequence[Sequence[float]],
    tol: float = TOL,
    tol_lagrangian: float = TOL,
    gap_high: float = GAP_HIGH,
) -> HJReport:
    """Check both HJ conditions at every sample and issue a verdict.

    ``SOLUTION`` when both residuals stay below ``tol`` everywhere,
    ``CONSISTENT-FAILURE`` when both are nonzero, ``THEOREM-VIOLATION`` when a
    sample has one residual below ``tol`` and the other above ``gap_high``
    (an implementation bug, not a mathematical outcome), and ``INCONCLUSIVE``
    when residuals fall in the band between.
    """
    results = []
    for q in samples:
        q = np.asarray(q, dtype=float)
        lag = lagrangian_residual(m, gamma, q)
        if lag >= tol_lagrangian:
            raise LagrangianPreconditionError(
                f"image of γ is not Lagrangian at q = {q.tolist()}: |d_ϑγ| = {lag:.3e}"
            )
        r_hj = hj_residual(m, gamma, q)
        r_rel = relatedness_residual(m, gamma, q)
        results.append(SampleResult(q.tolist(), lag, r_hj, r_rel, _classify(r_hj, r_rel, tol, gap_high)))
    verdicts = {r.verdict for r in results}
    max_l = max((r.lagrangian for r in results), default=0.0)
    max_h = max((r.hj for r in results), default=0.0)
    max_r = max((r.relatedness for r in results), default=0.0)
    if THEOREM_VIOLATION in verdicts:
        verdict = THEOREM_VIOLATION
    elif max_h < tol and max_r < tol:
        verdict = SOLUTION
    elif max_h >= tol and max_r >= tol:
        verdict = CONSISTENT_FAILURE
    else:
        verdict = INCONCLUSIVE
    return HJReport(results, max_l, max_h, max_r, verdict, tol)


def lagrangian_perp_check(m: LcsModel, gamma, q) -> float:
    """Largest principal angle between ``♯_Λ(TL°)`` and ``TL^⊥`` at ``γ(q)``.

    ``TL^⊥`` is computed directly from Ω_θ as ``{u : Ω_θ(u, w) = 0 ∀ w ∈ TL}``;
    ``♯_Λ`` comes from the bivector.  For a Lagrangian image both also equal
    ``TL`` (see :func:`lagrangian_perp_subspaces`).
    """
    tl, ann_image, perp = lagrangian_perp_subspaces(m, gamma, q)
    return float(np.max(subspace_angles(ann_image, perp)))


def lagrangian_perp_subspaces(m: LcsModel, gamma, q):
    """Bases of ``TL``, ``♯_Λ(TL°)`` and ``TL^⊥`` (as matrix columns)."""
    form = _form(m, gamma)
    q = np.asarray(q, dtype=float)
    z = section_point(m, gamma, q)
    n = m.n
    tl = _tangent(form, q)
    if np.linalg.matrix_rank(tl) != n:
        raise LcsError("tangent space of the section is rank deficient")
    ann = null_space(tl.T)
    if ann.shape[1] != n:
        raise LcsError("annihilator has the wrong dimension")
    image = np.column_stack([sharp_lambda(m, z, ann[:, k]) for k in range(n)])
    perp = null_space(tl.T @ omega_theta_at(m, z).T)
    if np.linalg.matrix_rank(image) != n or perp.shape[1] != n:
        raise LcsError("rank deficiency in the orthogonal complement")
    return tl, image, perp


# complete solutions --------------------------------------------------------------


def _check_phi(m: LcsModel, phi: CompleteSolution) -> None:
    if len(phi.momenta) != m.n:
        raise ValueError(f"complete solution has {len(phi.momenta)} momenta, model needs {m.n}")
    allowed = set(m.coords) | set(phi.param_names) | set(m.params)
    for e in phi.momenta:
        extra = free_vars(e) - allowed
        if extra:
            raise ValueError(f"complete solution uses unknown names {sorted(extra)}")


def _phi_jets(m: LcsModel, phi: CompleteSolution, q, lam):
    env = dict(m.params)
    env.update(zip(m.coords, map(float, q)))
    env.update(zip(phi.param_names, map(float, lam)))
    active = tuple(m.coords) + phi.param_names
    return [eval_jet(e, env, active, 1) for e in phi.momenta]


def param_jacobian(m: LcsModel, phi: CompleteSolution, q, lam) -> np.ndarray:
    """``∂Φ/∂λ`` at ``(q, λ)``."""
    n = m.n
    return np.array([j.grad[n:] for j in _phi_jets(m, phi, q, lam)])


@dataclass
class CompleteReport:
    per_lambda: list[dict]
    passed: bool
    max_commutator: Optional[float] = None

    def to_dict(self) -> dict:
        out = {"passed": self.passed, "per_lambda": self.per_lambda}
        if self.max_commutator is not None:
            out["max_commutator"] = self.max_commutator
        return out


def complete_validate(
    m: LcsModel,
    phi: CompleteSolution,
    lambda_samples: Sequence[Sequence[float]],
    q_samples: Sequence[Sequence[float]],
    tol: float = TOL,
    cond_max: float = 1e12,
) -> CompleteReport:
    """Every section ``Φ_λ`` must be an HJ solution and ``∂Φ/∂λ`` nonsingular."""
    _check_phi(m, phi)
    records = []
    for lam in lambda_samples:
        lam = [float(v) for v in np.atleast_1d(lam)]
        rec: dict = {"lambda": lam}
        worst_cond = max(np.linalg.cond(param_jacobian(m, phi, q, lam)) for q in q_samples)
        rec["max_param_jacobian_cond"] = float(worst_cond)
        try:
            rep = hj_verify(m, phi.section(lam), q_samples, tol=tol, tol_lagrangian=tol)
            rec.update(
                verdict=rep.verdict,
                max_lagrangian=rep.max_lagrangian,
                max_hj=rep.max_hj,
                max_relatedness=rep.max_relatedness,
            )
        except LagrangianPreconditionError as exc:
            rec.update(verdict="NOT-LAGRANGIAN", detail=str(exc))
        rec["passed"] = rec["verdict"] == SOLUTION and worst_cond < cond_max
        records.append(rec)
    return CompleteReport(records, all(r["passed"] for r in records))


def extract_f(
    m: LcsModel,
    phi: CompleteSolution,
    z,
    lam0: Optional[Sequence[float]] = None,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> tuple[np.ndarray, np.ndarray]:
    """Parameters ``λ = f(z)`` with ``Φ_λ(q) = p``, and the gradients ``df_i``.

    Returns ``(λ, D)`` where row ``i`` of ``D`` is ``df_i`` in phase
    coordinates, obtained by implicit differentiation of ``Φ(q, λ) - p = 0``.
    """
    _check_phi(m, phi)
    z = m.require(z)
    n = m.n
    q, p = z[:n], z[n:]
    lam = np.zeros(n) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    for _ in range(max_iter + 1):
        jets = _phi_jets(m, phi, q, lam)
        r = np.array([j.value for j in jets]) - p
        jl = np.array([j.grad[n:] for j in jets])
        if np.max(np.abs(r)) < tol:
            break
        if not np.all(np.isfinite(jl)) or np.linalg.cond(jl) > 1e14:
            raise NewtonError("singular parameter Jacobian ∂Φ/∂λ")
        lam = lam - np.linalg.solve(jl, r)
    else:
        raise NewtonError(f"Newton did not converge in {max_iter} iterations (|r| = {np.max(np.abs(r)):.3e})")
    jq = np.array([j.grad[:n] for j in jets])
    if np.linalg.cond(jl) > 1e14:
        raise NewtonError("singular parameter Jacobian ∂Φ/∂λ")
    d = -np.linalg.solve(jl, np.hstack([jq, -np.eye(n)]))
    return lam, d


def commutation_check(
    m: LcsModel, phi: CompleteSolution, z_samples: Sequence[Sequence[float]]
) -> float:
    """``max |{f_i, f_j}|`` over the samples."""
    worst = 0.0
    n = m.n
    for z in z_samples:
        lam, d = extract_f(m, phi, z)
        for i in range(n):
            for j in range(i + 1, n):
                worst = max(worst, abs(bracket_values(m, z, lam[i], d[i], lam[j], d[j])))
    return worst


def chart_section(c, m: LcsModel, gamma, qn):
    """The section in chart coordinates, ``γ'_k = Σ_i γ_i ∂q^i/∂q'^k``, as order-1 jets."""
    form = _form(m, gamma)
    bwd = c.backward_jets(qn, order=2)
    k = len(bwd)
    # old coordinates as order-1 jets in the chart coordinates
    env = dict(form.params)
    env.update({name: Jet(j.value, j.grad) for name, j in zip(m.coords, bwd)})
    g_old = [evaluate(e, env) for e in form.coeffs]
    out = []
    for kk in range(k):
        acc = 0.0
        for i, j in enumerate(bwd):
            acc = acc + g_old[i] * Jet(j.grad[kk], j.hess[kk])
        out.append(acc if isinstance(acc, Jet) else Jet(float(acc), np.zeros(k)))
    return out


def local_lagrangian_residual(c, m: LcsModel, gamma, qn) -> float:
    """``‖γ_α* ω_α‖∞`` at the chart point ``qn`` (Lagrangian test w.r.t. ``ω_α``)."""
    qn = np.asarray(qn, dtype=float)
    jets = chart_section(c, m, gamma, qn)
    pn = np.array([j.value for j in jets])
    dg = np.array([j.grad for j in jets])
    ld = local_data(c, m, np.concatenate([qn, pn]))
    t = np.vstack([np.eye(m.n), dg])
    return float(np.max(np.abs(t.T @ ld.omega @ t), initial=0.0))
