"""Canonical (fixed-magnetization) Monte Carlo in a slowly varying field.

Configurations live on the full box with free, plus, minus or Dobrushin
boundary conditions.  The canonical dynamics is Metropolis spin exchange
(Kawasaki type): a proposal swaps two opposite spins, so the total
magnetization is conserved exactly.  Two proposal sets are available,
nearest-neighbour pairs (physical dynamics) and arbitrary pairs (fast
mixing for equilibrium studies).

Coarse-graining averages spins over the cells of the coarse grid and is
exactly compatible with the global magnetization, which makes the
empirical profiles directly comparable with the variational maximizers
of :mod:`gravising.profiles`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import exchange_proposals, exchange_proposals_tally, flip_proposals
from .lattice import FieldSpec, LatticeGeometry
from .profiles import MesoProfile


@dataclass(frozen=True)
class Boundary:
    """Boundary condition: free, plus, minus or Dobrushin(normal)."""

    kind: str
    normal: Optional[tuple[float, ...]] = None

    _KINDS = ("free", "plus", "minus", "dobrushin")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"boundary kind must be one of {self._KINDS}")
        if self.kind == "dobrushin":
            if self.normal is None:
                raise ValueError("dobrushin boundary requires a normal vector")
            vec = np.asarray(self.normal, dtype=float)
            norm = np.linalg.norm(vec)
            if norm == 0.0:
                raise ValueError("dobrushin normal must be nonzero")
            object.__setattr__(self, "normal", tuple(vec / norm))
        elif self.normal is not None:
            raise ValueError("only dobrushin boundaries carry a normal")

    @classmethod
    def free(cls):
        return cls("free")

    @classmethod
    def plus(cls):
        return cls("plus")

    @classmethod
    def minus(cls):
        return cls("minus")

    @classmethod
    def dobrushin(cls, normal):
        return cls("dobrushin", tuple(float(x) for x in normal))


def _dobrushin_eta(normal, sites, n_side):
    center = (n_side - 1) / 2.0
    proj = (np.asarray(sites, dtype=float) - center) @ np.asarray(normal, dtype=float)
    return np.where(proj >= 0.0, 1, -1).astype(np.int64)


@dataclass
class SpinConfiguration:
    """Spins in {-1, +1} on the box, with a boundary condition."""

    geometry: LatticeGeometry
    spins: np.ndarray
    boundary: Boundary

    def __post_init__(self):
        spins = np.asarray(self.spins)
        if spins.shape != self.geometry.site_shape:
            raise ValueError(
                f"spin array shape {spins.shape} does not match box {self.geometry.site_shape}"
            )
        if not np.all(np.abs(spins) == 1):
            raise ValueError("spins must be +-1")
        self.spins = spins.astype(np.int8)

    @property
    def total_magnetization(self) -> int:
        return int(self.spins.sum())

    def copy(self) -> "SpinConfiguration":
        return SpinConfiguration(self.geometry, self.spins.copy(), self.boundary)


def quantize_magnetization(m: float, geometry: LatticeGeometry) -> int:
    """Nearest realizable total magnetization to ``m * n_sites``.

    The result has the parity of the site count (flipping one spin moves
    the total by 2); ties break toward the larger value.
    """
    if abs(m) > 1.0:
        raise ValueError("magnetization density must lie in [-1, 1]")
    volume = geometry.n_sites
    target = m * volume
    base = int(np.floor(target))
    candidates = [k for k in (base - 1, base, base + 1, base + 2) if (k - volume) % 2 == 0]
    candidates = [k for k in candidates if -volume <= k <= volume]
    best = min(candidates, key=lambda k: (abs(k - target), -k))
    return best


def layered_configuration(geometry, total_m, boundary=None) -> SpinConfiguration:
    """Plus spins filled from the bottom layers up (dense phase at i_d = 0)."""
    boundary = boundary or Boundary.free()
    volume = geometry.n_sites
    if (total_m - volume) % 2 != 0 or abs(total_m) > volume:
        raise ValueError("total magnetization not realizable on this box")
    n_plus = (volume + total_m) // 2
    spins = -np.ones(volume, dtype=np.int8)
    order = _sites_by_height(geometry)
    spins[order[:n_plus]] = 1
    return SpinConfiguration(geometry, spins.reshape(geometry.site_shape), boundary)


def random_configuration(geometry, total_m, seed, boundary=None) -> SpinConfiguration:
    boundary = boundary or Boundary.free()
    volume = geometry.n_sites
    if (total_m - volume) % 2 != 0 or abs(total_m) > volume:
        raise ValueError("total magnetization not realizable on this box")
    n_plus = (volume + total_m) // 2
    spins = -np.ones(volume, dtype=np.int8)
    rng = np.random.default_rng(seed)
    spins[rng.permutation(volume)[:n_plus]] = 1
    return SpinConfiguration(geometry, spins.reshape(geometry.site_shape), boundary)


def _sites_by_height(geometry) -> np.ndarray:
    """Flat site indices sorted by the height coordinate (last axis)."""
    shape = geometry.site_shape
    heights = np.indices(shape)[-1].reshape(-1)
    return np.argsort(heights, kind="stable")


def _neighbor_table(geometry):
    """Internal nearest-neighbour indices: (nbrs (V, 2d), counts (V,))."""
    shape = geometry.site_shape
    volume = geometry.n_sites
    idx = np.arange(volume).reshape(shape)
    nbrs = np.full((volume, 2 * geometry.d), -1, dtype=np.int64)
    slot = 0
    for axis in range(geometry.d):
        for shift in (-1, +1):
            src = [slice(None)] * geometry.d
            dst = [slice(None)] * geometry.d
            if shift == 1:
                src[axis] = slice(0, shape[axis] - 1)
                dst[axis] = slice(1, None)
            else:
                src[axis] = slice(1, None)
                dst[axis] = slice(0, shape[axis] - 1)
            flat_src = idx[tuple(src)].reshape(-1)
            flat_dst = idx[tuple(dst)].reshape(-1)
            nbrs[flat_src, slot] = flat_dst
            slot += 1
    # compact rows: valid entries first (descending sort pushes -1 last)
    counts = (nbrs >= 0).sum(axis=1).astype(np.int8)
    nbrs = -np.sort(-nbrs, axis=1)
    np.maximum(nbrs, 0, out=nbrs)
    return nbrs, counts


def _boundary_field(geometry, boundary) -> np.ndarray:
    """Sum of boundary spins adjacent to every site (integer array)."""
    out = np.zeros(geometry.site_shape, dtype=np.int64)
    if boundary.kind == "free":
        return out
    coords = None
    for axis in range(geometry.d):
        for side, outside in ((0, -1), (geometry.n_side - 1, geometry.n_side)):
            face = [slice(None)] * geometry.d
            face[axis] = side
            face = tuple(face)
            if boundary.kind == "plus":
                out[face] += 1
            elif boundary.kind == "minus":
                out[face] -= 1
            else:
                if coords is None:
                    coords = np.indices(geometry.site_shape)
                face_coords = np.stack([coords[k][face].reshape(-1) for k in range(geometry.d)], axis=1)
                face_coords[:, axis] = outside
                eta = _dobrushin_eta(boundary.normal, face_coords, geometry.n_side)
                out[face] += eta.reshape(out[face].shape)
    return out


def energy(config: SpinConfiguration, field_spec: Optional[FieldSpec] = None) -> float:
    """Full Hamiltonian: bonds, field term and boundary term."""
    s = config.spins.astype(np.int64)
    bond = 0
    for axis in range(config.geometry.d):
        a = [slice(None)] * config.geometry.d
        b = [slice(None)] * config.geometry.d
        a[axis] = slice(0, -1)
        b[axis] = slice(1, None)
        bond -= int(np.sum(s[tuple(a)] * s[tuple(b)]))
    boundary = -int(np.sum(_boundary_field(config.geometry, config.boundary) * s))
    field_term = 0.0
    if field_spec is not None:
        field_term = -float(np.sum(field_spec.site_values() * s))
    return bond + boundary + field_term


class CanonicalSampler:
    """Metropolis spin-exchange chain at fixed total magnetization.

    ``proposal`` is ``"nn"`` (uniform over internal bonds) or ``"any"``
    (uniform over ordered site pairs); both are symmetric, so the chain
    satisfies detailed balance with respect to the canonical Boltzmann
    measure restricted to the fixed-magnetization sector.  The run is
    deterministic given the seed and the sequence of sweep calls.
    """

    MAX_BLOCK = 1 << 20

    def __init__(self, config, beta, field_spec=None, seed=0, proposal="any"):
        if beta < 0.0:
            raise ValueError("beta must be >= 0")
        if proposal not in ("nn", "any"):
            raise ValueError("proposal must be 'nn' or 'any'")
        self.config = config
        self.beta = float(beta)
        self.field_spec = field_spec
        self.proposal = proposal
        self.rng = np.random.default_rng(seed)
        geo = config.geometry
        self._spins = config.spins.reshape(-1)
        self._nbrs, self._ncnt = _neighbor_table(geo)
        self._eff_int = _boundary_field(geo, config.boundary).reshape(-1)
        self._field = (
            field_spec.site_values().reshape(-1).astype(float)
            if field_spec is not None
            else np.zeros(geo.n_sites)
        )
        if self.proposal == "nn":
            self._edges = self._edge_list(geo)
        self._m_total = config.total_magnetization
        self._bond_energy = int(round(energy(config, None)))
        self._field_energy = -float(np.dot(self._field, self._spins))
        self._field_comp = 0.0
        self.sweeps_done = 0
        self.proposals = 0
        self.attempts = 0
        self.accepted = 0

    @staticmethod
    def _edge_list(geometry):
        shape = geometry.site_shape
        idx = np.arange(geometry.n_sites).reshape(shape)
        pairs = []
        for axis in range(geometry.d):
            a = [slice(None)] * geometry.d
            b = [slice(None)] * geometry.d
            a[axis] = slice(0, -1)
            b[axis] = slice(1, None)
            pairs.append(
                np.stack([idx[tuple(a)].reshape(-1), idx[tuple(b)].reshape(-1)], axis=1)
            )
        return np.concatenate(pairs, axis=0)

    @property
    def energy(self) -> float:
        """Incrementally maintained total energy."""
        return self._bond_energy + self._field_energy

    @property
    def total_magnetization(self) -> int:
        return self._m_total

    @property
    def acceptance_rate(self) -> float:
        """Accepted fraction of genuine exchange attempts (opposite-spin pairs)."""
        return self.accepted / self.attempts if self.attempts else 0.0

    def _draw_pairs(self, k):
        if self.proposal == "nn":
            rows = self.rng.integers(0, len(self._edges), size=k)
            chosen = self._edges[rows]
            return np.ascontiguousarray(chosen[:, 0]), np.ascontiguousarray(chosen[:, 1])
        volume = self.config.geometry.n_sites
        a = self.rng.integers(0, volume, size=k)
        b = self.rng.integers(0, volume, size=k)
        return a, b

    def sweep(self, count: int = 1) -> "CanonicalSampler":
        """Run ``count`` sweeps of ``n_sites`` exchange proposals each."""
        if count < 1:
            raise ValueError("count must be >= 1")
        remaining = count * self.config.geometry.n_sites
        while remaining > 0:
            block = min(remaining, self.MAX_BLOCK)
            a, b = self._draw_pairs(block)
            u = self.rng.random(block)
            (self._bond_energy, self._field_energy, self._field_comp, att, acc) = (
                exchange_proposals(
                    self._spins, self._nbrs, self._ncnt, self._field, self._eff_int,
                    self.beta, a, b, u,
                    self._bond_energy, self._field_energy, self._field_comp,
                )
            )
            self.attempts += int(att)
            self.accepted += int(acc)
            self.proposals += block
            remaining -= block
        self.sweeps_done += count
        self.config.spins = self._spins.reshape(self.config.geometry.site_shape)
        return self

    def run_with_state_tally(self, proposals: int) -> np.ndarray:
        """Run raw proposals, tallying the state occupancy after each one.

        Only available for boxes of at most 20 sites; states are encoded
        by the bitmask of plus spins.  Returns the visit-count array of
        length ``2**n_sites``.
        """
        volume = self.config.geometry.n_sites
        if volume > 20:
            raise ValueError("state tally is meant for tiny boxes (<= 20 sites)")
        counts = np.zeros(1 << volume, dtype=np.int64)
        code = 0
        for v in range(volume):
            if self._spins[v] == 1:
                code |= 1 << v
        remaining = proposals
        while remaining > 0:
            block = min(remaining, self.MAX_BLOCK)
            a, b = self._draw_pairs(block)
            u = self.rng.random(block)
            (self._bond_energy, self._field_energy, self._field_comp, att, acc, code) = (
                exchange_proposals_tally(
                    self._spins, self._nbrs, self._ncnt, self._field, self._eff_int,
                    self.beta, a, b, u,
                    self._bond_energy, self._field_energy, self._field_comp, counts, code,
                )
            )
            self.attempts += int(att)
            self.accepted += int(acc)
            self.proposals += block
            remaining -= block
        self.config.spins = self._spins.reshape(self.config.geometry.site_shape)
        return counts

    def recomputed_energy(self) -> float:
        return energy(self.config, self.field_spec)


def coarse_grain(config: SpinConfiguration, a: Optional[int] = None) -> MesoProfile:
    """Cell averages of the spins; exactly compatible with M / n_sites."""
    geo = config.geometry
    a = geo.a if a is None else a
    if geo.n_side % a != 0:
        raise ValueError(f"cell side {a} must divide the box side {geo.n_side}")
    cells = geo.n_side // a
    shape = sum(((cells, a),) * geo.d, ())
    blocks = config.spins.astype(float).reshape(shape)
    for axis in reversed(range(1, 2 * geo.d, 2)):
        blocks = blocks.mean(axis=axis)
    target = config.total_magnetization / geo.n_sites
    sub_geo = LatticeGeometry(geo.n_side, geo.d, a)
    return MesoProfile(sub_geo, blocks, target_m=target)


def concentration_distance(empirical: MesoProfile, reference: MesoProfile) -> float:
    """Normalized L1 distance between two profiles on matching grids."""
    if empirical.geometry != reference.geometry:
        raise ValueError("profiles live on different coarse grids")
    return float(np.mean(np.abs(empirical.values - reference.values)))


def interface_height_estimate(
    profile: MesoProfile,
    max_crossing_width: float = 0.25,
    monotonicity_tol: float = 0.25,
) -> Optional[float]:
    """Height in [0, 1) where the column-averaged profile crosses mid-value.

    Columns are averaged over all axes but the height axis; the crossing
    of the midpoint between the top and bottom values is located by
    linear interpolation between layers.  Returns ``None`` (no-interface
    signal) when the transition is too wide -- the quarter-amplitude
    crossings further apart than ``max_crossing_width`` -- or when the
    column average is non-monotone beyond ``monotonicity_tol`` times the
    amplitude.
    """
    vals = profile.values
    column = vals.reshape(-1, vals.shape[-1]).mean(axis=0)
    layers = column.size
    if layers < 2:
        return None
    bottom, top = column[0], column[-1]
    amplitude = bottom - top
    if amplitude == 0.0:
        return None
    direction = np.sign(amplitude)
    # with height the profile should move toward `top`; flag excursions
    # against that trend beyond the tolerance
    trend = np.diff(column) * np.sign(top - bottom)
    if np.any(trend < -monotonicity_tol * abs(amplitude)):
        return None

    def crossing(level):
        below = direction * (column - level) <= 0.0
        k = int(np.argmax(below))
        if k == 0:
            return 0.5 / layers
        x0, x1 = column[k - 1], column[k]
        frac = (level - x0) / (x1 - x0) if x1 != x0 else 0.5
        return (k - 0.5 + frac) / layers

    mid = 0.5 * (bottom + top)
    lo_q = mid + 0.25 * amplitude
    hi_q = mid - 0.25 * amplitude
    width = abs(crossing(hi_q) - crossing(lo_q))
    if width > max_crossing_width:
        return None
    return float(crossing(mid))


def snapshot(config: SpinConfiguration, path) -> None:
    """Write the configuration as a binary PGM (P5) image.

    Plus spins map to white (255), minus spins to black (0); rows run
    from the top of the box (largest height) down, so gravity reads
    vertically.  Two-dimensional configurations only.
    """
    if config.geometry.d != 2:
        raise ValueError("snapshots are only defined for d = 2")
    spins = config.spins
    img = np.where(spins.T[::-1, :] > 0, 255, 0).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + img.tobytes())


class GrandCanonicalSampler:
    """Single-spin-flip Metropolis chain in a uniform field ``h``."""

    MAX_BLOCK = 1 << 20

    def __init__(self, config, beta, h=0.0, seed=0):
        self.config = config
        self.beta = float(beta)
        self.h = float(h)
        self.rng = np.random.default_rng(seed)
        geo = config.geometry
        self._spins = config.spins.reshape(-1)
        self._nbrs, self._ncnt = _neighbor_table(geo)
        self._eff_int = _boundary_field(geo, config.boundary).reshape(-1)
        self._field = np.full(geo.n_sites, self.h)
        self._m_total = config.total_magnetization

    @property
    def total_magnetization(self) -> int:
        return self._m_total

    def sweep(self, count: int = 1) -> "GrandCanonicalSampler":
        remaining = count * self.config.geometry.n_sites
        volume = self.config.geometry.n_sites
        while remaining > 0:
            block = min(remaining, self.MAX_BLOCK)
            sites = self.rng.integers(0, volume, size=block)
            u = self.rng.random(block)
            self._m_total += int(
                flip_proposals(
                    self._spins, self._nbrs, self._ncnt, self._field, self._eff_int,
                    self.beta, sites, u,
                )
            )
            remaining -= block
        self.config.spins = self._spins.reshape(self.config.geometry.site_shape)
        return self


def tabulate_isotherm(
    beta,
    h_values,
    n_side: int = 32,
    d: int = 2,
    sweeps: int = 10_000,
    burnin: int = 1_000,
    seed: int = 0,
):
    """Grand-canonical magnetization estimates on a homogeneous box.

    For each field value the chain starts fully ordered along the field
    (plus for h >= 0), burns in and then averages the magnetization over
    the measurement sweeps.  Returns an array aligned with ``h_values``.
    Feeding the result into :class:`gravising.thermo.Tabulated` requires
    the grid to start at h = 0; the clipping and monotonicity repair of
    that class absorb the statistical noise of the estimates.
    """
    geo = LatticeGeometry(n_side, d, 1)
    out = np.empty(len(h_values))
    for idx, h in enumerate(h_values):
        sign = 1 if h >= 0.0 else -1
        config = SpinConfiguration(
            geo, sign * np.ones(geo.site_shape, dtype=np.int8), Boundary.free()
        )
        sampler = GrandCanonicalSampler(config, beta, h=h, seed=seed + idx)
        sampler.sweep(burnin)
        acc = 0.0
        for _ in range(sweeps):
            sampler.sweep(1)
            acc += sampler.total_magnetization
        out[idx] = acc / (sweeps * geo.n_sites)
    return out
