"""Checking candidate sections against the Hamilton-Jacobi conditions.

Run with ``python3 demos/02_hamilton_jacobi.py``.
"""

import numpy as np

from lcsmech.hj import SectionGamma, hj_verify, local_lagrangian_residual
from lcsmech.modelfile import load_model

line = load_model("exp-line").model
flat = load_model("flat-plane").model
plane = load_model("punctured-plane").model

xs = [[x] for x in np.linspace(-2, 2, 9)]

# %% on the line with Lee form 2 dx, p = C e^x solves the twisted HJ equation
for coeff in ("exp(x)", "3*exp(x)", "x"):
    rep = hj_verify(line, [coeff], xs)
    print(f"gamma = {coeff:10s} -> {rep.verdict:18s} max HJ {rep.max_hj:.1e}, max relatedness {rep.max_relatedness:.1e}")

# %% with a zero Lee form this is classical HJ: exact forms with constant energy
sec = SectionGamma(("a", "b"), {"a": 0.7, "b": -1.3})
print("flat plane, gamma = a dx + b dy ->", hj_verify(flat, sec, [[0.1, 0.2], [2.0, -1.0]]).verdict)

# %% a nontrivial solution on the punctured plane: gamma = e^phi (dr - r dphi)
gamma = (
    "exp(atan2(y, x))*(x + y)/sqrt(x^2 + y^2)",
    "exp(atan2(y, x))*(y - x)/sqrt(x^2 + y^2)",
)
rng = np.random.default_rng(0)
qs = [q for q in rng.uniform(-2, 2, (60, 2)) if np.hypot(*q) > 0.3 and not (q[0] < 0 and abs(q[1]) < 0.1)]
rep = hj_verify(plane, gamma, qs)
print(f"punctured plane, e^phi (dr - r dphi) -> {rep.verdict} on {len(qs)} points")
polar = plane.chart("polar")
worst = max(local_lagrangian_residual(polar, plane, gamma, polar.forward(q, plane.coords)) for q in qs)
print("Lagrangian residual for the chart form e^{-2 phi} Omega_theta: %.1e" % worst)

# %% a section that is not Lagrangian is rejected before the HJ test
try:
    hj_verify(plane, ["y", "0"], [[1.0, 0.5]])
except ValueError as exc:
    print("rejected:", exc)
