"""Optimal mesoscopic magnetization profiles in a slowly varying field.

Given a field, a thermodynamic backend and a target magnetization density
``m``, the functional

    Psi(q) = (1/n_cells) * sum_cells ( h(x) q(x) - f(q(x)) )

is maximized over profiles ``q`` compatible with ``m`` (cell average
equal to ``m``).  The maximizer is explicit: shift the field by the
unique constant ``hbar`` that makes the shifted isotherm profile
``q(x) = m(h(x) - hbar)`` compatible.  When ``m`` falls inside a jump gap
of the cell-averaged isotherm, ``hbar`` coincides with one of the cell
field values and the cells at that level form a coexistence plateau whose
common value is fixed by mass balance.

The continuum analogue for a gravitational field solves

    pressure(g - hbar) - pressure(-hbar) = m * g

and yields the height profile ``s -> m(g*s - hbar)``, with an interface
at height ``hbar/g`` in the phase-coexistence regime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lattice import FieldSpec, GravitationalField, LatticeGeometry
from .thermo import PLATEAU_THRESHOLD, ThermoBackend

COMPATIBILITY_TOL = 1e-12


@dataclass
class MesoProfile:
    """Cell-indexed magnetization values with a target mean."""

    geometry: LatticeGeometry
    values: np.ndarray
    target_m: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.geometry.cell_shape:
            raise ValueError(
                f"profile shape {vals.shape} does not match cell grid {self.geometry.cell_shape}"
            )
        if np.any(np.abs(vals) > 1.0 + 1e-12):
            raise ValueError("profile values must lie in [-1, 1]")
        self.values = vals

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def compatible(self) -> bool:
        return abs(self.mean - self.target_m) <= COMPATIBILITY_TOL


@dataclass
class ProfileSolution:
    """Maximizing profile together with its shift and plateau data."""

    hbar: float
    profile: MesoProfile
    plateau_mask: np.ndarray = field(repr=False)
    plateau_value: Optional[float]
    psi_value: float

    @property
    def n_plateau_cells(self) -> int:
        return int(self.plateau_mask.sum())


def _magnetization_with_atoms(backend, args, zero_sign):
    """Isotherm on shifted field values, resolving exact zeros to ``zero_sign * m*``."""
    mstar = backend.spontaneous_magnetization()
    out = backend.magnetization(np.where(args == 0.0, 1.0, args))
    return np.where(args == 0.0, zero_sign * mstar, out)


def mean_magnetization_at_shift(field_spec: FieldSpec, backend: ThermoBackend, h: float):
    """Cell average of ``m(h_cell - h)``, strictly decreasing in ``h``.

    If ``h`` hits a cell field value while the backend is in its
    coexistence regime the average is set-valued; the pair
    ``(right_limit, left_limit)`` is returned instead of a float and the
    caller must handle it.
    """
    levels, counts = field_spec.cell_levels()
    args = levels - h
    total = counts.sum()
    mstar = backend.spontaneous_magnetization()
    if mstar > PLATEAU_THRESHOLD and np.any(args == 0.0):
        right = float(np.dot(counts, _magnetization_with_atoms(backend, args, -1.0)) / total)
        left = float(np.dot(counts, _magnetization_with_atoms(backend, args, +1.0)) / total)
        return (right, left)
    return float(np.dot(counts, backend.magnetization(args)) / total)


def _mean_mag_left(field_spec, backend, h):
    """Left limit of the cell-averaged isotherm at shift ``h``."""
    levels, counts = field_spec.cell_levels()
    vals = _magnetization_with_atoms(backend, levels - h, +1.0)
    return float(np.dot(counts, vals) / counts.sum())


def solve_hbar(field_spec: FieldSpec, backend: ThermoBackend, m: float, tol: float = 1e-8) -> float:
    """Largest shift ``h`` with cell-averaged magnetization still >= ``m``.

    Bisection on the monotone predicate "left limit >= m", which is also
    correct when ``m`` falls inside a jump gap: the bracket then shrinks
    onto the corresponding atom of the cell field values.
    """
    if not (-1.0 < m < 1.0):
        raise ValueError("target magnetization must lie in (-1, 1)")
    levels, _ = field_spec.cell_levels()
    lo_dom, hi_dom = backend.field_domain()

    def predicate(h):
        return _mean_mag_left(field_spec, backend, h) >= m

    lo = float(levels.min()) - 1.0
    hi = float(levels.max()) + 1.0
    if np.isfinite(lo_dom):
        # keep every isotherm argument inside the backend's field domain
        lo = max(lo, float(levels.max()) + lo_dom * (1.0 - 1e-12))
        hi = min(hi, float(levels.min()) + hi_dom * (1.0 - 1e-12))
        if lo >= hi or not predicate(lo) or predicate(hi):
            raise ValueError(
                "target magnetization is not bracketed within the backend's field range"
            )
    else:
        step = 1.0
        while not predicate(lo):
            lo -= step
            step *= 2.0
        step = 1.0
        while predicate(hi):
            hi += step
            step *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def psi(field_spec: FieldSpec, backend: ThermoBackend, profile: MesoProfile) -> float:
    """Value of the profile functional ``mean(h q - f(q))``."""
    q = profile.values
    h = field_spec.cell_values()
    return float(np.mean(h * q - backend.free_energy(q)))


def optimal_profile(field_spec: FieldSpec, backend: ThermoBackend, m: float) -> ProfileSolution:
    """Construct the maximizer of the profile functional at magnetization ``m``.

    Off-plateau cells carry ``m(h_cell - hbar)``; if ``hbar`` lands on a
    cell field value (coexistence case) the cells at that level all get
    the common corrective value required by compatibility, which mass
    balance confines to ``[-m*, m*]``.  Among the degenerate maximizers
    that redistribute plateau mass, the symmetric single-value assignment
    is returned.
    """
    hbar = solve_hbar(field_spec, backend, m, tol=1e-13)
    cells = field_spec.cell_values()
    mstar = backend.spontaneous_magnetization()
    levels, counts = field_spec.cell_levels()

    plateau_mask = np.zeros(cells.shape, dtype=bool)
    plateau_value = None
    if mstar > PLATEAU_THRESHOLD:
        nearest = levels[np.argmin(np.abs(levels - hbar))]
        if abs(nearest - hbar) <= max(1e-11, 1e-9 * max(1.0, abs(nearest))):
            interval = mean_magnetization_at_shift(field_spec, backend, float(nearest))
            if isinstance(interval, tuple) and interval[0] - 1e-12 <= m <= interval[1] + 1e-12:
                hbar = float(nearest)
                plateau_mask = cells == hbar
                n_plateau = int(plateau_mask.sum())
                left = interval[1]
                plateau_value = mstar + (cells.size / n_plateau) * (m - left)
                plateau_value = float(np.clip(plateau_value, -mstar, mstar))

    values = np.empty(cells.shape)
    off = ~plateau_mask
    values[off] = backend.magnetization(cells[off] - hbar)
    if plateau_value is not None:
        values[plateau_mask] = plateau_value
    profile = MesoProfile(field_spec.geometry, values, target_m=m)
    return ProfileSolution(
        hbar=hbar,
        profile=profile,
        plateau_mask=plateau_mask,
        plateau_value=plateau_value,
        psi_value=psi(field_spec, backend, profile),
    )


def random_compatible_profile(
    geometry: LatticeGeometry,
    m: float,
    rng: np.random.Generator,
    low: float = -0.95,
    high: float = 0.95,
) -> MesoProfile:
    """Random profile with exact cell average ``m``.

    Draws i.i.d. uniform cell values and then spreads the compatibility
    deficit uniformly, clipping at the bounds and repeating on the
    remaining slack until the mean is exact to rounding.
    """
    if not (low < m < high):
        raise ValueError("target magnetization must lie strictly inside (low, high)")
    values = rng.uniform(low, high, size=geometry.cell_shape)
    for _ in range(200):
        deficit = m - values.mean()
        if abs(deficit) <= 1e-15:
            break
        values = np.clip(values + deficit, low, high)
    return MesoProfile(geometry, values, target_m=m)


@dataclass
class ContinuumProfile:
    """Continuum-limit profile for a gravitational field."""

    hbar: float
    profile_fn: Callable[[np.ndarray], np.ndarray]
    interface_height: Optional[float]


def continuum_gravity_profile(
    backend: ThermoBackend, g: float, m: float, tol: float = 1e-8
) -> ContinuumProfile:
    """Solve ``pressure(g - h) - pressure(-h) = m g`` for the continuum shift.

    The left side is strictly monotone in ``h`` by strict convexity of
    the pressure, so bisection applies.  Returns the shift, the height
    profile ``s -> m(g s - hbar)`` and, in the coexistence regime with
    the discontinuity inside the box, the interface height ``hbar / g``.
    """
    if g == 0.0:
        raise ValueError("degenerate field g = 0; use a constant-field profile instead")
    if not (-1.0 < m < 1.0):
        raise ValueError("target magnetization must lie in (-1, 1)")

    def residual(h):
        return backend.pressure(g - h) - backend.pressure(-h) - m * g

    # residual is increasing in h for g < 0 and decreasing for g > 0
    sign = 1.0 if g < 0.0 else -1.0
    lo = min(g, 0.0) - 1.0
    hi = max(g, 0.0) + 1.0
    step = 1.0
    while sign * residual(lo) > 0.0:
        lo -= step
        step *= 2.0
    step = 1.0
    while sign * residual(hi) < 0.0:
        hi += step
        step *= 2.0
    xtol = tol * min(1.0, abs(g))
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if sign * residual(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    hbar = 0.5 * (lo + hi)

    def profile_fn(height):
        return backend.magnetization(g * np.asarray(height, dtype=float) - hbar)

    interface = None
    if backend.spontaneous_magnetization() > PLATEAU_THRESHOLD:
        height = hbar / g
        if 0.0 <= height < 1.0:
            interface = height
    return ContinuumProfile(hbar=hbar, profile_fn=profile_fn, interface_height=interface)


def gravitational_reference_profile(
    geometry: LatticeGeometry, backend: ThermoBackend, g: float, m: float
) -> ProfileSolution:
    """Convenience wrapper: optimal profile for the 1/N-scaled field."""
    return optimal_profile(GravitationalField(geometry, g, exponent=1), backend, m)
