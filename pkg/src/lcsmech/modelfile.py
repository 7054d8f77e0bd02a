"""JSON model, section and complete-solution files, plus model validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .expr import ExprError, as_expr
from .geometry import ext_d_oneform, ldr_d2
from .hj import CompleteSolution, SectionGamma
from .lcs import (
    Chart,
    LcsModel,
    chart_lee,
    local_data,
    omega_theta_at,
    omega_theta_field,
    phase_jacobian,
    sharp,
    to_chart,
    transition_scalar,
)
from .report import CheckRecord, Report
from .sampling import DEFAULT_BOX, DEFAULT_COUNT, DEFAULT_SEED, sample_box

__all__ = [
    "ModelFileError",
    "Sampling",
    "ModelFile",
    "BUILTIN_MODELS",
    "builtin_names",
    "parse_model",
    "load_model",
    "load_section",
    "load_complete",
    "phase_samples",
    "VALIDATE_TOLS",
    "validate_model",
]

SYMPLECTIC_NOTE = "symplectic (Lee form zero)"

VALIDATE_TOLS = {
    "closed": 1e-8,
    "ldr": 1e-8,
    "nondegenerate": 1e-12,
    "roundtrip": 1e-10,
    "potential": 1e-8,
    "cocycle": 1e-12,
}


class ModelFileError(ValueError):
    """A model, section or complete-solution file is malformed."""


@dataclass(frozen=True)
class Sampling:
    seed: int = DEFAULT_SEED
    count: int = DEFAULT_COUNT
    box: Optional[tuple[tuple[float, float], ...]] = None


@dataclass(frozen=True)
class ModelFile:
    model: LcsModel
    sampling: Sampling = field(default_factory=Sampling)


def builtin_names() -> list[str]:
    root = resources.files("lcsmech") / "models"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


BUILTIN_MODELS = ("punctured-plane", "exp-line", "flat-plane")


def _need(d: Mapping, key: str, where: str):
    if key not in d:
        raise ModelFileError(f"{where}: missing field {key!r}")
    return d[key]


def _str_list(v, where: str) -> list[str]:
    if not isinstance(v, list) or not all(isinstance(s, (str, int, float)) for s in v):
        raise ModelFileError(f"{where}: expected a list of expressions")
    return [str(s) for s in v]


def _params(v, where: str) -> dict[str, float]:
    if v is None:
        return {}
    if not isinstance(v, dict):
        raise ModelFileError(f"{where}: params must be an object")
    try:
        return {str(k): float(x) for k, x in v.items()}
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{where}: params must be real numbers") from exc


def parse_model(data: Mapping, name: str = "model") -> ModelFile:
    """Build a model from a decoded JSON object."""
    if not isinstance(data, dict):
        raise ModelFileError("model file must contain a JSON object")
    name = str(data.get("name", name))
    try:
        coords = _str_list(_need(data, "coordinates", name), f"{name}.coordinates")
        lee = _str_list(_need(data, "lee_form", name), f"{name}.lee_form")
        params = _params(data.get("params"), name)
        charts = []
        for i, cd in enumerate(data.get("charts", []) or []):
            where = f"{name}.charts[{i}]"
            if not isinstance(cd, dict):
                raise ModelFileError(f"{where}: expected an object")
            new = _str_list(_need(cd, "new_coords", where), where + ".new_coords")
            if len(new) != len(coords):
                raise ModelFileError(f"{where}: chart dimension {len(new)} != {len(coords)}")
            charts.append(
                Chart(
                    str(_need(cd, "name", where)),
                    tuple(new),
                    tuple(as_expr(e) for e in _str_list(_need(cd, "fwd", where), where + ".fwd")),
                    tuple(as_expr(e) for e in _str_list(_need(cd, "bwd", where), where + ".bwd")),
                    as_expr(str(_need(cd, "potential", where))),
                    as_expr(str(cd.get("domain", "1"))),
                    params,
                )
            )
        model = LcsModel(
            tuple(coords),
            tuple(as_expr(e) for e in lee),
            as_expr(str(_need(data, "hamiltonian", name))),
            as_expr(str(data.get("domain", "1"))),
            params,
            tuple(charts),
            name,
        )
        s = data.get("sampling", {}) or {}
        box = s.get("box")
        if box is not None:
            box = tuple((float(lo), float(hi)) for lo, hi in box)
            if len(box) != 2 * len(coords):
                raise ModelFileError(f"{name}.sampling.box needs {2 * len(coords)} ranges")
        sampling = Sampling(int(s.get("seed", DEFAULT_SEED)), int(s.get("count", DEFAULT_COUNT)), box)
    except ModelFileError:
        raise
    except ExprError:
        raise
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{name}: {exc}") from exc
    return ModelFile(model, sampling)


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: invalid JSON ({exc})") from exc


def load_model(source: str | Path) -> ModelFile:
    """Load a model from a path, or by built-in name such as ``exp-line``."""
    path = Path(source)
    if path.is_file():
        return parse_model(_read_json(path), path.stem)
    res = resources.files("lcsmech") / "models" / f"{source}.json"
    if res.is_file():
        return parse_model(json.loads(res.read_text(encoding="utf-8")), str(source))
    raise ModelFileError(f"no model file or built-in model named {str(source)!r}")


def load_section(source: str | Path | Mapping) -> SectionGamma:
    """``{"coefficients": [...], "params": {...}}``."""
    data = source if isinstance(source, Mapping) else _read_json(Path(source))
    try:
        coeffs = _str_list(_need(data, "coefficients", "section"), "section.coefficients")
        return SectionGamma(tuple(as_expr(c) for c in coeffs), _params(data.get("params"), "section"))
    except (TypeError, AttributeError) as exc:
        raise ModelFileError(f"section: {exc}") from exc


def load_complete(source: str | Path | Mapping) -> CompleteSolution:
    """``{"params": ["l1", ...], "momenta": [...]}``."""
    data = source if isinstance(source, Mapping) else _read_json(Path(source))
    try:
        names = _str_list(_need(data, "params", "phi"), "phi.params")
        momenta = _str_list(_need(data, "momenta", "phi"), "phi.momenta")
        return CompleteSolution(tuple(names), tuple(as_expr(e) for e in momenta))
    except (TypeError, AttributeError) as exc:
        raise ModelFileError(f"phi: {exc}") from exc


def phase_samples(mf: ModelFile, count: Optional[int] = None, seed: Optional[int] = None) -> np.ndarray:
    """Seeded admissible phase points from the file's sampling box."""
    m = mf.model
    box = mf.sampling.box or (DEFAULT_BOX,) * (2 * m.n)
    return sample_box(
        2 * m.n,
        mf.sampling.count if count is None else count,
        mf.sampling.seed if seed is None else seed,
        box,
        m.admissible,
    )


# validation --------------------------------------------------------------------------


def _max(values: Sequence[float]) -> float:
    return float(max(values)) if len(values) else 0.0


def _chart_points(c: Chart, m: LcsModel, zs: np.ndarray) -> list[np.ndarray]:
    out = []
    for z in zs:
        qn = c.forward(z[: m.n], m.coords)
        if np.all(np.isfinite(qn)) and c.contains(qn):
            out.append(to_chart(c, m, z))
    return out


def _to_model_coords(t: np.ndarray, w: np.ndarray) -> np.ndarray:
    ti = np.linalg.inv(t)
    return ti.T @ w @ ti


def validate_model(
    m: LcsModel,
    samples: np.ndarray,
    tols: Optional[Mapping[str, float]] = None,
) -> Report:
    """Sampled checks of the l.c.s. axioms and chart consistency."""
    tol = {**VALIDATE_TOLS, **(tols or {})}
    rep = Report("validate", extra={"model": m.name})
    if m.is_symplectic:
        rep.notes.append(SYMPLECTIC_NOTE)
    zs = np.asarray(samples, dtype=float)
    n = m.n
    lee = m.lee_form
    rep.add(CheckRecord(
        "lee_closed",
        len(zs),
        _max([np.max(np.abs(ext_d_oneform(lee, z[:n])), initial=0.0) for z in zs]),
        tol["closed"],
    ))
    field_ = omega_theta_field(m)
    theta = m.theta
    rep.add(CheckRecord(
        "ldr_d2_omega",
        len(zs),
        _max([np.max(np.abs(ldr_d2(field_, theta, z)), initial=0.0) for z in zs]),
        tol["ldr"],
    ))
    res = []
    for z in zs:
        big_m = omega_theta_at(m, z)
        for e in np.eye(2 * n):
            x = sharp(m, z, e)
            y = np.linalg.solve(big_m.T, e)
            res.append(float(np.max(np.abs(x - y))) / (1.0 + float(np.max(np.abs(y)))))
    rep.add(CheckRecord("nondegenerate", len(zs), _max(res), tol["nondegenerate"]))

    chart_pts = {}
    for c in m.charts:
        pts = _chart_points(c, m, zs)
        chart_pts[c.name] = pts
        rt, pot = [], []
        for zn in pts:
            qn = zn[:n]
            back = np.array([j.value for j in c.backward_jets(qn, 1)])
            again = c.forward(back, m.coords)
            rt.append(float(np.max(np.abs(again - qn))) / (1.0 + float(np.max(np.abs(qn)))))
            pot.append(float(np.max(np.abs(c.sigma_grad(qn) - chart_lee(c, m, qn)))))
        rep.add(CheckRecord(f"chart_roundtrip[{c.name}]", len(pts), _max(rt), tol["roundtrip"]))
        rep.add(CheckRecord(f"potential[{c.name}]", len(pts), _max(pot), tol["potential"]))

    for i, ca in enumerate(m.charts):
        for cb in m.charts[i + 1 :]:
            res = []
            count = 0
            for z in zs:
                q = z[:n]
                qa, qb = ca.forward(q, m.coords), cb.forward(q, m.coords)
                if not (ca.contains(qa) and cb.contains(qb)):
                    continue
                count += 1
                lam_ba = transition_scalar(ca, cb, m, q)
                lam_ab = transition_scalar(cb, ca, m, q)
                res.append(abs(lam_ba * lam_ab - 1.0))
                la = local_data(ca, m, to_chart(ca, m, z))
                lb = local_data(cb, m, to_chart(cb, m, z))
                wa = _to_model_coords(la.T, la.omega)
                wb = _to_model_coords(lb.T, lb.omega)
                s = 1.0 + float(np.max(np.abs(wb)))
                res.append(float(np.max(np.abs(wb - lam_ba * wa))) / s)
                res.append(abs(lb.h - lam_ba * la.h) / (1.0 + abs(lb.h)))
            rep.add(CheckRecord(f"cocycle[{ca.name},{cb.name}]", count, _max(res), tol["cocycle"]))
    return rep
