"""Dynamics on the punctured plane with Lee form 2 dphi.

Run with ``python3 demos/01_punctured_plane.py``.
"""

import numpy as np

from lcsmech.dynamics import IntegratorConfig, compare, diagnostics, integrate_local, integrate_phase
from lcsmech.expr import to_source
from lcsmech.lcs import from_chart, hamiltonian_vf, lee_vf, local_data, omega_theta_at, to_chart
from lcsmech.modelfile import load_model

np.set_printoptions(precision=4, suppress=True)

# %% the model ships as a built-in JSON file
m = load_model("punctured-plane").model
print("coordinates:", m.phase_coords)
print("Lee form:", [to_source(e) for e in m.lee])

# %% the two-form is canonical where y p_y + x p_x = 0 and picks up a dx^dy term elsewhere
for z in ([1, 0, 0, 1], [1, 0, 1, 0]):
    print(f"Omega_theta at {z}:\n{omega_theta_at(m, z)}")

# %% Lee field and Hamiltonian field
print("Z at (1,0,0,1):  ", lee_vf(m, [1, 0, 0, 1]))
print("X_h at (1,0,0,1):", hamiltonian_vf(m, [1, 0, 0, 1]))
print("X_h at (1,0,1,0):", hamiltonian_vf(m, [1, 0, 1, 0]))

# %% integrate: h is not conserved, it drifts as dh/dt = h theta(X_h)
traj = integrate_phase(m, [1, 0, 0, 1], IntegratorConfig(1.0))
d = diagnostics(m, traj)
print("h(0) = %.4f, h(1) = %.4f" % (d.h[0], d.h[-1]))
print("max defining residual: %.1e" % d.residual.max())
print("max drift-law mismatch: %.1e" % d.drift_check.max())

# %% the same flow from the polar chart, where e^{-2 phi} Omega_theta is symplectic
polar = m.chart("polar")
z0 = np.array([1, 0.5, 0.1, 1])
zn0 = to_chart(polar, m, z0)
ld = local_data(polar, m, zn0)
print("polar point:", zn0, " sigma = %.4f" % ld.sigma)
print("local omega:\n", ld.omega)
cfg = IntegratorConfig(1.0)
glob = integrate_phase(m, z0, cfg)
loc = integrate_local(polar, m, zn0, cfg)
print("global vs local after mapping back: %.1e" % compare(glob, loc, lambda zn: from_chart(polar, m, zn)))
