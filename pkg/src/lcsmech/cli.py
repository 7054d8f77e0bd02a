"""``lcsmech`` command-line entry point.

Exit codes: 0 ok, 1 check failed, 2 parse or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dynamics import (
    IntegrationError,
    IntegratorConfig,
    compare,
    integrate_local,
    integrate_phase,
    write_csv,
)
from .expr import ExprError, as_expr
from .hj import (
    GAP_HIGH,
    THEOREM_VIOLATION,
    TOL,
    LagrangianPreconditionError,
    NewtonError,
    commutation_check,
    complete_validate,
    hj_verify,
    local_lagrangian_residual,
    section_point,
)
from .jacobi import jacobi_bracket
from .lcs import InadmissiblePointError, LcsError, from_chart, to_chart
from .modelfile import (
    VALIDATE_TOLS,
    ModelFile,
    ModelFileError,
    load_complete,
    load_model,
    load_section,
    phase_samples,
    validate_model,
)
from .report import FAIL, PASS, CheckRecord, Report, to_json
from .sampling import DEFAULT_BOX, sample_box

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_FAIL", "EXIT_PARSE", "EXIT_NUMERIC"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_NUMERIC = 3

GLUE_TOL = 1e-6
COMMUTE_TOL = 1e-8


class _InputError(Exception):
    pass


class _NumericFailure(Exception):
    pass


def _floats(values: Optional[Sequence[str]], what: str) -> Optional[np.ndarray]:
    """Accept ``1 0``, ``1,0`` or a mix."""
    if values is None:
        return None
    out = []
    for v in values:
        for part in str(v).split(","):
            if part.strip():
                try:
                    out.append(float(part))
                except ValueError as exc:
                    raise _InputError(f"{what}: {part!r} is not a number") from exc
    return np.array(out)


def _emit(text: str, out: Optional[str]) -> None:
    if out and out != "-":
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _state(mf: ModelFile, q0, p0) -> np.ndarray:
    n = mf.model.n
    if q0 is None or p0 is None:
        raise _InputError("both --q0 and --p0 are required")
    if len(q0) != n or len(p0) != n:
        raise _InputError(f"--q0 and --p0 need {n} values each")
    return np.concatenate([q0, p0])


def _config(args) -> IntegratorConfig:
    if args.rk45:
        return IntegratorConfig(args.t_end, "rk45", rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    return IntegratorConfig(args.t_end, "rk4", dt=args.dt)


def _validation_tols(args) -> dict:
    return {k: getattr(args, f"tol_{k}") for k in VALIDATE_TOLS}


# subcommands ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    mf = load_model(args.model)
    zs = phase_samples(mf, args.samples, args.seed)
    rep = validate_model(mf.model, zs, _validation_tols(args))
    _emit(to_json(rep), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_integrate(args) -> int:
    mf = load_model(args.model)
    m = mf.model
    z0 = _state(mf, _floats(args.q0, "--q0"), _floats(args.p0, "--p0"))
    if args.t_end < 0:
        raise _InputError("--t-end must be non-negative")
    if args.t_end == 0:
        m.require(z0)
        write_csv(m, None, args.out)
        return EXIT_OK
    try:
        traj = integrate_phase(m, z0, _config(args))
    except IntegrationError as exc:
        write_csv(m, exc.partial, args.out)
        print(f"lcsmech: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_csv(m, traj, args.out)
    if not traj.completed:
        print(f"lcsmech: trajectory left the domain at t = {traj.exit_time!r}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _base_samples(mf: ModelFile, gamma, count: int, seed: int) -> np.ndarray:
    m = mf.model
    box = (mf.sampling.box or (DEFAULT_BOX,) * (2 * m.n))[: m.n]

    def accept(q):
        try:
            section_point(m, gamma, q)
            return True
        except (LcsError, ExprError, ValueError):
            return False

    return sample_box(m.n, count, seed, box, accept)


def cmd_hj_check(args) -> int:
    mf = load_model(args.model)
    m = mf.model
    gamma = load_section(args.section)
    count = args.samples if args.samples is not None else mf.sampling.count
    seed = args.seed if args.seed is not None else mf.sampling.seed
    qs = _base_samples(mf, gamma, count, seed)
    out: dict = {"command": "hj-check", "model": m.name}
    try:
        rep = hj_verify(m, gamma, qs, args.tol, args.tol_lagrangian, args.gap_high)
    except LagrangianPreconditionError as exc:
        out.update(verdict="NOT-LAGRANGIAN", detail=str(exc))
        _emit(to_json(out), args.out)
        return EXIT_FAIL
    local = {}
    for c in m.charts:
        vals = []
        for q in qs:
            qn = c.forward(q, m.coords)
            if np.all(np.isfinite(qn)) and c.contains(qn):
                vals.append(local_lagrangian_residual(c, m, gamma, qn))
        local[c.name] = {"samples": len(vals), "max_residual": max(vals, default=0.0)}
    d = rep.to_dict()
    if not args.per_sample:
        d.pop("samples")
    out.update(d)
    out["samples"] = len(qs)
    out["local_lagrangian"] = local
    _emit(to_json(out), args.out)
    return EXIT_FAIL if rep.verdict == THEOREM_VIOLATION else EXIT_OK


def cmd_glue_check(args) -> int:
    mf = load_model(args.model)
    m = mf.model
    try:
        chart = m.chart(args.chart)
    except KeyError as exc:
        raise _InputError(str(exc.args[0])) from exc
    z0 = m.require(_state(mf, _floats(args.q0, "--q0"), _floats(args.p0, "--p0")))
    rep = validate_model(m, phase_samples(mf, args.samples, args.seed), _validation_tols(args))
    rep.command = "glue-check"
    rep.extra["chart"] = chart.name
    if not rep.passed:
        rep.notes.append("model validation failed; dynamics not compared")
        _emit(to_json(rep), args.out)
        return EXIT_FAIL
    cfg = _config(args)
    zn0 = to_chart(chart, m, z0)
    try:
        glob = integrate_phase(m, z0, cfg)
        loc = integrate_local(chart, m, zn0, cfg)
    except IntegrationError as exc:
        raise _NumericFailure(str(exc)) from exc
    if not (glob.completed and loc.completed):
        raise _NumericFailure("trajectory left the model or chart domain before t-end")
    dev = compare(glob, loc, lambda zn: from_chart(chart, m, zn))
    rep.add(CheckRecord("glue_deviation", len(glob), dev, args.tol_glue))
    _emit(to_json(rep), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_bracket(args) -> int:
    mf = load_model(args.model)
    m = mf.model
    z = _floats(args.point, "--point")
    if len(z) != 2 * m.n:
        raise _InputError(f"--point needs {2 * m.n} values")
    val = jacobi_bracket(m, as_expr(args.f), as_expr(args.g), z)
    _emit(f"{val:.17g}\n", args.out)
    return EXIT_OK


def cmd_complete_check(args) -> int:
    mf = load_model(args.model)
    m = mf.model
    phi = load_complete(args.phi)
    n = m.n
    seed = args.seed if args.seed is not None else mf.sampling.seed
    if args.lambda_values:
        lam = _floats(args.lambda_values, "--lambda")
        if len(lam) % n:
            raise _InputError(f"--lambda values must come in groups of {n}")
        lams = lam.reshape(-1, n)
    else:
        lams = sample_box(n, args.lambda_samples, seed + 1, [(-2.0, 2.0)] * n)
    box = (mf.sampling.box or (DEFAULT_BOX,) * (2 * n))[:n]
    qs = sample_box(n, args.q_samples, seed, box, lambda q: m.admissible(np.concatenate([q, np.zeros(n)])))
    crep = complete_validate(m, phi, lams, qs, tol=args.tol)
    rep = Report("complete-check", extra={"model": m.name, "per_lambda": crep.per_lambda})
    for r in crep.per_lambda:
        rep.add(CheckRecord(
            f"hj[lambda={','.join(repr(v) for v in r['lambda'])}]",
            len(qs),
            max(r.get("max_hj", np.inf), r.get("max_relatedness", np.inf), r.get("max_lagrangian", np.inf)),
            args.tol,
            PASS if r["passed"] else FAIL,
        ))
    zs = []
    for lam in lams:
        sec = phi.section(lam)
        for q in qs:
            zs.append(section_point(m, sec, q))
    try:
        worst = commutation_check(m, phi, zs)
    except NewtonError as exc:
        raise _NumericFailure(str(exc)) from exc
    rep.add(CheckRecord("commutation", len(zs), worst, args.tol_commute))
    _emit(to_json(rep), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


# parser ----------------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("model", help="model JSON path or built-in name")
    p.add_argument("--out", default=None, help="output file (default stdout)")


def _add_sampling(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=None, help="sample count (default from model file)")
    p.add_argument("--seed", type=int, default=None, help="sampling seed (default from model file)")


def _add_validation_tols(p: argparse.ArgumentParser) -> None:
    for k, v in VALIDATE_TOLS.items():
        p.add_argument(f"--tol-{k}", type=float, default=v)


def _add_state(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q0", nargs="+", required=True)
    p.add_argument("--p0", nargs="+", required=True)
    p.add_argument("--t-end", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dt", type=float, default=1e-3, help="rk4 step (default 1e-3)")
    g.add_argument("--rk45", action="store_true", help="adaptive Dormand-Prince instead of rk4")
    p.add_argument("--rel-tol", type=float, default=1e-9)
    p.add_argument("--abs-tol", type=float, default=1e-9)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lcsmech", description="l.c.s. mechanics checks")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the l.c.s. axioms and charts of a model")
    _add_common(p)
    _add_sampling(p)
    _add_validation_tols(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("integrate", help="integrate Hamilton's equations to CSV")
    p.add_argument("model")
    _add_state(p)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("hj-check", help="test a section against the HJ theorem")
    _add_common(p)
    p.add_argument("section", help="section JSON file")
    _add_sampling(p)
    p.add_argument("--tol", type=float, default=TOL)
    p.add_argument("--tol-lagrangian", type=float, default=TOL)
    p.add_argument("--gap-high", type=float, default=GAP_HIGH)
    p.add_argument("--per-sample", action="store_true", help="include per-sample residuals")
    p.set_defaults(func=cmd_hj_check)

    p = sub.add_parser("glue-check", help="compare global and chart-local dynamics")
    _add_common(p)
    p.add_argument("chart")
    _add_state(p)
    _add_sampling(p)
    _add_validation_tols(p)
    p.add_argument("--tol-glue", type=float, default=GLUE_TOL)
    p.set_defaults(func=cmd_glue_check)

    p = sub.add_parser("bracket", help="evaluate the Jacobi bracket at a point")
    _add_common(p)
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--point", nargs="+", required=True)
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("complete-check", help="validate a complete solution")
    _add_common(p)
    p.add_argument("phi", help="complete-solution JSON file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lambda-samples", type=int, default=4)
    g.add_argument("--lambda", dest="lambda_values", nargs="+", default=None)
    p.add_argument("--q-samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=TOL)
    p.add_argument("--tol-commute", type=float, default=COMMUTE_TOL)
    p.set_defaults(func=cmd_complete_check)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ModelFileError, ExprError, _InputError, InadmissiblePointError, OSError) as exc:
        print(f"lcsmech: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (_NumericFailure, IntegrationError, NewtonError, np.linalg.LinAlgError) as exc:
        print(f"lcsmech: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LcsError, ValueError) as exc:
        print(f"lcsmech: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
