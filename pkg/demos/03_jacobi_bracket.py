"""The Jacobi bracket {f, g} = Omega_theta(X_f, X_g).

Run with ``python3 demos/03_jacobi_bracket.py``.
"""

import numpy as np

from lcsmech.jacobi import jacobi_bracket, jacobi_identity_residual, leibniz_defect, local_bracket
from lcsmech.lcs import to_chart
from lcsmech.modelfile import load_model

plane = load_model("punctured-plane").model
flat = load_model("flat-plane").model
z = np.array([0.8, 0.5, -0.3, 1.1])

# %% with a zero Lee form the bracket is the canonical Poisson bracket
print("{x, p_x} on the flat plane:", jacobi_bracket(flat, "x", "p_x", z))

# %% the constant 1 no longer commutes with everything: {1, g} = Z(g)
print("{1, p_y} at (1,0,0,1):", jacobi_bracket(plane, "1", "p_y", [1, 0, 0, 1]))

# %% the Leibniz rule fails by g k Z(f)
print("Leibniz defect for f = p_y, g = k = 1:", leibniz_defect(plane, "p_y", "1", "1", [1, 0, 0, 1]))

# %% the Jacobi identity still holds
f, g, k = "x*p_y + y^2", "p_x^2 - x*y", "y*p_x*p_y"
print("Jacobi identity residual: %.1e" % jacobi_identity_residual(plane, f, g, k, z))

# %% the same bracket from the polar chart's conformal symplectic data
polar = plane.chart("polar")
zn = to_chart(polar, plane, z)
print("global %.12f" % jacobi_bracket(plane, f, g, z))
print("local  %.12f" % local_bracket(polar, plane, f, g, zn))
print("local, Lee terms dropped %.12f" % local_bracket(polar, plane, f, g, zn, literal=True))
