"""Tour of the thermodynamic backends.

Prints the magnetization isotherms and pressures of the three backends,
checks the Legendre duality between pressure and free energy numerically,
and shows the coexistence plateau of the mean-field model.
"""

import numpy as np

from gravising import Exact1D, MeanField, Tabulated

beta = 1.0
exact = Exact1D(beta)
mf = MeanField(beta, d=2)
h_grid = np.linspace(0.0, 3.0, 301)
tab = Tabulated(beta, h_grid, exact.magnetization(h_grid), phi0=exact.pressure(0.0))

print("=== isotherms m(h) and pressures phi(h), beta = 1 ===")
print(f"{'h':>6} {'m_1d':>9} {'m_mf':>9} {'m_tab':>9} {'phi_1d':>9} {'phi_mf':>9}")
for h in (0.0, 0.1, 0.5, 1.0, 2.0):
    print(
        f"{h:6.2f} {exact.magnetization(h):9.5f} {mf.magnetization(h):9.5f} "
        f"{tab.magnetization(h):9.5f} {exact.pressure(h):9.5f} {mf.pressure(h):9.5f}"
    )

print("\n=== mean-field coexistence (beta_c = 1/4 here) ===")
mstar = mf.spontaneous_magnetization()
print(f"spontaneous magnetization m* = {mstar:.6f}")
print(f"jump of the isotherm across h = 0: {mf.magnetization(1e-12) - mf.magnetization(-1e-12):.6f}")
ms = np.linspace(-mstar, mstar, 5)
print("free energy on the plateau (constant):", np.round(mf.free_energy(ms), 10))

print("\n=== Legendre duality: sup_m (m h - f(m)) recovers phi(h) ===")
grid = np.linspace(-0.999, 0.999, 4001)
f_exact = exact.free_energy(grid)
for h in (0.25, 1.0, 2.0):
    rebuilt = np.max(grid * h - f_exact)
    print(f"h = {h:4.2f}: sup = {rebuilt:.8f}   phi = {exact.pressure(h):.8f}")

print("\n=== derivative consistency: m(h) vs finite differences of phi ===")
eps = 1e-5
for h in (0.3, 1.5):
    fd = (exact.pressure(h + eps) - exact.pressure(h - eps)) / (2 * eps)
    print(f"h = {h:4.2f}: m = {exact.magnetization(h):.10f}   d(phi)/dh = {fd:.10f}")
