"""Equilibrium droplet shapes, with and without gravity.

Builds Wulff shapes for an isotropic and a faceted surface tension, then
minimizes the gravity-modified functional: the droplet settles on the
bottom wall and flattens as the gravity coefficient grows.  Polygons are
written to demos/output/ as x,y CSV files.
"""

from pathlib import Path

import numpy as np

from gravising import SurfaceTension, droplet_energy, minimize_droplet, wulff_shape

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)


def save(name, shape):
    path = out / name
    np.savetxt(path, shape.polygon, delimiter=",", header="x,y", comments="")
    return path.name


print("=== Wulff shapes at zero gravity ===")
iso = SurfaceTension.isotropic()
ell1 = SurfaceTension.ell1()
disc = wulff_shape(iso, 0.1)
square = wulff_shape(ell1, 0.16)
per = np.sum(np.linalg.norm(np.roll(disc.polygon, -1, 0) - disc.polygon, axis=1))
print(f"isotropic tau: {len(disc.polygon)}-gon, perimeter {per:.5f} "
      f"(disc: {2*np.sqrt(np.pi*0.1):.5f}) -> {save('wulff_disc.csv', disc)}")
print(f"l1 tau: the Wulff body is the square, corners\n{np.round(square.polygon, 4)}"
      f" -> {save('wulff_square.csv', square)}")

print("\n=== gravity flattens the droplet on the bottom ===")
area, m_star = 0.08, 0.8
print(f"{'gamma':>6} {'energy':>9} {'centroid_y':>11} {'width':>7} {'height':>7}")
for gamma in (0.0, 6.0, 30.0, 60.0):
    shape = minimize_droplet(iso, gamma, m_star, area, n_vertices=128)
    e = droplet_energy(shape, iso, gamma, m_star)
    w = np.ptp(shape.polygon[:, 0])
    h = np.ptp(shape.polygon[:, 1])
    save(f"droplet_gamma{gamma:g}.csv", shape)
    print(f"{gamma:6.1f} {e:9.5f} {shape.centroid[1]:11.4f} {w:7.4f} {h:7.4f}")
print("polygons written to", out)
