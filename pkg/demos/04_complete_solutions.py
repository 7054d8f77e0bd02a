"""Complete solutions and their parameter functions.

Run with ``python3 demos/04_complete_solutions.py``.
"""

import math

import numpy as np

from lcsmech.dynamics import IntegratorConfig, integrate_phase
from lcsmech.hj import CompleteSolution, commutation_check, complete_validate, extract_f
from lcsmech.lcs import hamiltonian_vf
from lcsmech.modelfile import load_model

line = load_model("exp-line").model
flat = load_model("flat-plane").model

# %% p = l1 e^x is an HJ solution for every l1, and nondegenerate in l1
phi = CompleteSolution(("l1",), ("l1*exp(x)",))
rep = complete_validate(line, phi, [[-1.0], [0.5], [1.0], [2.0]], [[x] for x in np.linspace(-2, 2, 9)])
print("complete solution valid:", rep.passed)

# %% inverting p = l1 e^x gives f = p e^{-x}, which is conserved by the flow
traj = integrate_phase(line, [0, 1], IntegratorConfig(0.5))
for z in traj.states[::100]:
    lam, d = extract_f(line, phi, z)
    print("state %s  f = %.10f  X_h(f) = %.1e" % (np.round(z, 4), lam[0], d[0] @ hamiltonian_vf(line, z)))
print("closed form p e^{-x} at the start:", 1 * math.exp(-0.0))

# %% in the symplectic case constant momenta give commuting parameter functions
phi2 = CompleteSolution(("l1", "l2"), ("l1", "l2"))
zs = np.random.default_rng(1).uniform(-3, 3, (20, 4))
print("max |{f_1, f_2}| on the flat plane:", commutation_check(flat, phi2, zs))
