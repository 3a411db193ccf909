"""Thermodynamic potentials of the homogeneous Ising model.

Every backend provides the grand-canonical pressure ``pressure(h)``, the
magnetization isotherm ``magnetization(h)`` (its derivative), the
spontaneous magnetization ``m*`` and the canonical free energy
``free_energy(m)``, the Legendre transform

    f(m) = sup_h ( h*m - pressure(h) ).

The isotherm is odd and non-decreasing in ``h`` for every backend; below
the critical point it jumps by ``2 m*`` across ``h = 0`` and ``f`` is
constant on the coexistence plateau ``[-m*, m*]`` (the supremum is
attained at ``h = 0`` there).

Three backends are shipped:

* ``Exact1D`` -- transfer-matrix solution of the one-dimensional chain
  (continuous isotherm, no transition; exact reference).
* ``MeanField`` -- Curie-Weiss approximation with coordination ``2 d``
  (genuine first-order jump below ``beta_c = 1/(2 d)``).
* ``Tabulated`` -- monotone piecewise-linear interpolation of sampled
  ``(h, m)`` pairs, e.g. grand-canonical Monte Carlo estimates.

All value-returning methods accept scalars or numpy arrays.
"""

from __future__ import annotations

import numpy as np

# Backends report coexistence whenever m* exceeds this threshold.
PLATEAU_THRESHOLD = 1e-12


def bisect_increasing(func, lo, hi, xtol=1e-10, max_iter=200):
    """Vectorized bisection for a non-decreasing ``func`` with root in [lo, hi].

    ``lo`` and ``hi`` may be scalars or arrays (broadcast against the
    output of ``func``).  Monotonicity makes plain bisection safe even
    when ``func`` jumps across its root; the midpoint of the final
    bracket is returned.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    for _ in range(max_iter):
        if np.all(hi - lo <= xtol):
            break
        mid = 0.5 * (lo + hi)
        up = np.asarray(func(mid)) >= 0.0
        lo = np.where(up, lo, mid)
        hi = np.where(up, mid, hi)
    out = 0.5 * (lo + hi)
    return out if out.ndim else float(out)


def _log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


class ThermoBackend:
    """Common free-energy machinery; subclasses supply the isotherm."""

    beta: float

    def _check_beta(self, beta):
        if not (np.isfinite(beta) and beta > 0.0):
            raise ValueError("beta must be a positive finite number")
        return float(beta)

    # -- interface -------------------------------------------------------

    def pressure(self, h):
        raise NotImplementedError

    def magnetization(self, h):
        raise NotImplementedError

    def spontaneous_magnetization(self) -> float:
        raise NotImplementedError

    def field_domain(self) -> tuple[float, float]:
        """Open interval of admissible field arguments."""
        return (-np.inf, np.inf)

    def magnetization_range(self) -> tuple[float, float]:
        """Open interval of magnetizations reachable by the isotherm."""
        return (-1.0, 1.0)

    def _free_energy_boundary(self) -> float:
        """f at m = +-1, if finite for this backend."""
        raise ValueError("free energy at m = +-1 is not defined for this backend")

    # -- generic Legendre transform --------------------------------------

    def field_for_magnetization(self, m, xtol=1e-13):
        """Invert the isotherm: smallest h with magnetization(h) = m.

        On the coexistence plateau the answer is 0.  Uses bisection,
        which is safe across the jump by monotonicity.
        """
        m = np.asarray(m, dtype=float)
        scalar = m.ndim == 0
        m = np.atleast_1d(m)
        if np.any(np.abs(m) >= 1.0):
            raise ValueError("field_for_magnetization requires |m| < 1")
        mstar = self.spontaneous_magnetization()
        lo_dom, hi_dom = self.field_domain()

        hi = np.ones_like(m)
        if np.isfinite(hi_dom):
            hi = np.full_like(m, hi_dom * (1.0 - 1e-12))
        else:
            for _ in range(200):
                mask = (np.abs(self.magnetization(hi)) < np.abs(m)) & (m != 0.0)
                if not mask.any():
                    break
                hi[mask] *= 2.0
        hmag = bisect_increasing(
            lambda h: self.magnetization(h) - np.abs(m), np.zeros_like(m), hi, xtol=xtol
        )
        out = np.sign(m) * np.atleast_1d(hmag)
        out[np.abs(m) <= mstar + PLATEAU_THRESHOLD] = 0.0
        return float(out[0]) if scalar else out

    def free_energy(self, m):
        m = np.asarray(m, dtype=float)
        scalar = m.ndim == 0
        m = np.atleast_1d(m)
        if np.any(np.abs(m) > 1.0):
            raise ValueError("free_energy requires |m| <= 1")
        out = np.empty_like(m)
        at_edge = np.abs(m) == 1.0
        if at_edge.any():
            out[at_edge] = self._free_energy_boundary()
        inner = ~at_edge
        if inner.any():
            mi = m[inner]
            lo, hi = self.magnetization_range()
            if np.any((mi < lo) | (mi > hi)):
                raise ValueError(
                    f"magnetization outside the reachable range ({lo:.6g}, {hi:.6g})"
                )
            h = self.field_for_magnetization(mi)
            out[inner] = h * mi - self.pressure(h)
        return float(out[0]) if scalar else out


class Exact1D(ThermoBackend):
    """One-dimensional Ising chain, solved by its 2x2 transfer matrix.

    The pressure is ``log(lambda_+)/beta`` with the leading eigenvalue

        lambda_+ = e^beta cosh(beta h)
                   + sqrt(e^{2 beta} sinh^2(beta h) + e^{-2 beta}),

    whose field derivative gives the closed-form isotherm

        m(h) = sinh(beta h) / sqrt(sinh^2(beta h) + e^{-4 beta}).

    No phase transition: m* = 0 and the isotherm is analytic, which makes
    this backend the exact oracle of the suite.
    """

    def __init__(self, beta: float):
        self.beta = self._check_beta(beta)

    def pressure(self, h):
        u = self.beta * np.abs(np.asarray(h, dtype=float))
        lc = _log_cosh(u)
        # lambda_+ = e^beta cosh(u) * (1 + sqrt(tanh(u)^2 + e^{-4 beta}/cosh(u)^2))
        q = np.sqrt(np.tanh(u) ** 2 + np.exp(-4.0 * self.beta - 2.0 * lc))
        out = (self.beta + lc + np.log1p(q)) / self.beta
        return out if out.ndim else float(out)

    def magnetization(self, h):
        h = np.asarray(h, dtype=float)
        u = self.beta * np.abs(h)
        small = u < 1.0
        s = np.sinh(np.where(small, u, 1.0))
        direct = s / np.sqrt(s**2 + np.exp(-4.0 * self.beta))
        # log-space form avoids sinh overflow for large |beta h|
        with np.errstate(divide="ignore"):
            log_s = np.where(small, 1.0, u + np.log1p(-np.exp(-2.0 * u)) - np.log(2.0))
        stable = 1.0 / np.sqrt(1.0 + np.exp(-4.0 * self.beta - 2.0 * log_s))
        out = np.sign(h) * np.where(small, direct, stable)
        return out if out.ndim else float(out)

    def spontaneous_magnetization(self) -> float:
        return 0.0

    def field_for_magnetization(self, m, xtol=None):
        # the isotherm inverts in closed form: sinh(beta h) = m e^{-2beta}/sqrt(1-m^2)
        m = np.asarray(m, dtype=float)
        if np.any(np.abs(m) >= 1.0):
            raise ValueError("field_for_magnetization requires |m| < 1")
        out = np.arcsinh(m * np.exp(-2.0 * self.beta) / np.sqrt(1.0 - m**2)) / self.beta
        return out if out.ndim else float(out)

    def free_energy(self, m):
        m = np.asarray(m, dtype=float)
        if np.any(np.abs(m) > 1.0):
            raise ValueError("free_energy requires |m| <= 1")
        edge = np.abs(m) == 1.0
        mi = np.where(edge, 0.0, m)
        h = self.field_for_magnetization(mi)
        out = np.where(edge, -1.0, h * mi - self.pressure(h))
        return out if out.ndim else float(out)

    def _free_energy_boundary(self) -> float:
        return -1.0  # fully ordered chain: one bond of energy -1 per site


class MeanField(ThermoBackend):
    """Curie-Weiss (mean-field) Ising model with coordination ``2 d``.

    The isotherm solves ``m = tanh(beta (2 d m + h))`` on the stable
    branch; below ``beta_c = 1/(2 d)`` it has a jump of ``2 m*`` at
    ``h = 0``, giving the profile machinery a genuine coexistence plateau
    to exercise.  ``magnetization(0.0)`` returns ``+m*`` by convention.
    """

    def __init__(self, beta: float, d: int = 2):
        self.beta = self._check_beta(beta)
        if d < 1:
            raise ValueError("dimension must be >= 1")
        self.d = int(d)
        self.z = 2 * self.d
        self._mstar = self._solve_mstar()

    @property
    def beta_critical(self) -> float:
        return 1.0 / self.z

    def _solve_mstar(self) -> float:
        k = self.beta * self.z
        if k <= 1.0:
            return 0.0
        root = bisect_increasing(lambda x: x - np.tanh(k * x), 1e-15, 1.0, xtol=1e-15)
        return float(root)

    def spontaneous_magnetization(self) -> float:
        return self._mstar

    def magnetization(self, h):
        h = np.asarray(h, dtype=float)
        ah = np.abs(h)
        # largest root of tanh(beta (z x + |h|)) = x, bracketed away from
        # the unstable branch by m*
        lo = np.full(ah.shape, self._mstar)
        hi = np.ones_like(ah)
        root = bisect_increasing(
            lambda x: x - np.tanh(self.beta * (self.z * x + ah)), lo, hi, xtol=1e-15
        )
        out = np.where(h == 0.0, self._mstar, np.sign(h) * np.atleast_1d(root))
        out = out.reshape(h.shape)
        return out if out.ndim else float(out)

    def _entropy(self, m):
        p = (1.0 + m) / 2.0
        q = (1.0 - m) / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            s = -np.where(p > 0.0, p * np.log(p), 0.0) - np.where(q > 0.0, q * np.log(q), 0.0)
        return s

    def pressure(self, h):
        h = np.asarray(h, dtype=float)
        m = np.abs(self.magnetization(np.abs(h)))
        out = np.abs(h) * m + self.d * m**2 + self._entropy(m) / self.beta
        return out if out.ndim else float(out)

    def free_energy(self, m):
        """Convex envelope of ``-d m^2 - s(m)/beta``.

        Outside the plateau the envelope coincides with the bare
        mean-field functional (which is convex beyond the binodal), on
        ``[-m*, m*]`` it is the constant ``-pressure(0)``.
        """
        m = np.asarray(m, dtype=float)
        if np.any(np.abs(m) > 1.0):
            raise ValueError("free_energy requires |m| <= 1")
        bare = -self.d * m**2 - self._entropy(m) / self.beta
        plateau = -self.d * self._mstar**2 - self._entropy(self._mstar) / self.beta
        out = np.where(np.abs(m) <= self._mstar, plateau, bare)
        return out if out.ndim else float(out)

    def _free_energy_boundary(self) -> float:
        return -float(self.d)

    def field_for_magnetization(self, m, xtol=None):
        m = np.asarray(m, dtype=float)
        if np.any(np.abs(m) >= 1.0):
            raise ValueError("field_for_magnetization requires |m| < 1")
        out = np.where(
            np.abs(m) <= self._mstar, 0.0, np.arctanh(m) / self.beta - self.z * m
        )
        return out if out.ndim else float(out)


class Tabulated(ThermoBackend):
    """Backend interpolating sampled isotherm values ``m(h)`` for h >= 0.

    The grid must start at ``h = 0``; the sample there is read as the
    right limit ``m(0+) = m*``.  Negative fields are served by oddness.
    Samples are clipped to [-1, 1] and made non-decreasing by a running
    maximum, so the interpolant is monotone by construction (Monte Carlo
    estimates may violate monotonicity by statistical noise).

    The pressure integrates the interpolant exactly from 0, offset by the
    reference value ``phi0 = pressure(0)``.
    """

    def __init__(self, beta, h_grid, m_grid, phi0=0.0):
        self.beta = self._check_beta(beta)
        h = np.asarray(h_grid, dtype=float)
        m = np.asarray(m_grid, dtype=float)
        if h.ndim != 1 or h.shape != m.shape or h.size < 2:
            raise ValueError("h_grid and m_grid must be 1-d arrays of equal length >= 2")
        if not np.all(np.isfinite(h)) or not np.all(np.isfinite(m)):
            raise ValueError("grid values must be finite")
        if np.any(np.diff(h) <= 0.0):
            raise ValueError("h_grid must be strictly increasing")
        if h[0] != 0.0:
            raise ValueError("h_grid must start at 0 (the m(0+) sample)")
        m = np.maximum.accumulate(np.clip(m, -1.0, 1.0))
        if m[0] < 0.0:
            raise ValueError("the h=0 sample encodes m(0+) = m* and must be >= 0")
        self.h_grid = h
        self.m_grid = m
        self.phi0 = float(phi0)
        # exact integral of the piecewise-linear interpolant at the nodes
        seg = 0.5 * (m[1:] + m[:-1]) * np.diff(h)
        self._phi_nodes = self.phi0 + np.concatenate(([0.0], np.cumsum(seg)))

    @classmethod
    def from_csv(cls, path, beta, phi0=0.0):
        """Load a two-column ``h,m`` CSV (header row required, # comments skipped)."""
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
            while first.lstrip().startswith("#"):
                first = fh.readline()
            names = [c.strip().lower() for c in first.split(",")]
            if names[:2] != ["h", "m"]:
                raise ValueError(f"{path}: expected header 'h,m', got {first.strip()!r}")
            data = np.loadtxt(fh, delimiter=",", comments="#", ndmin=2)
        return cls(beta, data[:, 0], data[:, 1], phi0=phi0)

    @property
    def h_max(self) -> float:
        return float(self.h_grid[-1])

    def field_domain(self):
        return (-self.h_max, self.h_max)

    def magnetization_range(self):
        return (-float(self.m_grid[-1]), float(self.m_grid[-1]))

    def _check_range(self, h):
        if np.any(np.abs(h) > self.h_max * (1.0 + 1e-15)):
            raise ValueError(f"field outside tabulated range [-{self.h_max:g}, {self.h_max:g}]")

    def magnetization(self, h):
        h = np.asarray(h, dtype=float)
        self._check_range(h)
        out = np.sign(h) * np.interp(np.abs(h), self.h_grid, self.m_grid)
        out = np.where(h == 0.0, self.m_grid[0], out)
        return out if out.ndim else float(out)

    def pressure(self, h):
        h = np.asarray(h, dtype=float)
        self._check_range(h)
        ah = np.abs(h)
        idx = np.clip(np.searchsorted(self.h_grid, ah, side="right") - 1, 0, self.h_grid.size - 2)
        h0 = self.h_grid[idx]
        m0 = self.m_grid[idx]
        slope = (self.m_grid[idx + 1] - m0) / (self.h_grid[idx + 1] - h0)
        t = ah - h0
        out = self._phi_nodes[idx] + m0 * t + 0.5 * slope * t**2
        return out if out.ndim else float(out)

    def spontaneous_magnetization(self) -> float:
        return float(self.m_grid[0])

    def field_for_magnetization(self, m, xtol=None):
        m = np.asarray(m, dtype=float)
        if np.any(np.abs(m) >= 1.0):
            raise ValueError("field_for_magnetization requires |m| < 1")
        lo, hi = self.magnetization_range()
        if np.any((m < lo) | (m > hi)):
            raise ValueError(f"magnetization outside tabulated range ({lo:.6g}, {hi:.6g})")
        # leftmost preimage; flat interpolant segments all give the same
        # Legendre value because the pressure is linear across them
        out = np.sign(m) * np.interp(np.abs(m), self.m_grid, self.h_grid)
        out = np.where(np.abs(m) <= self.m_grid[0], 0.0, out)
        return out if out.ndim else float(out)

    def free_energy(self, m):
        m = np.asarray(m, dtype=float)
        if np.any(np.abs(m) > 1.0):
            raise ValueError("free_energy requires |m| <= 1")
        if np.any(np.abs(m) == 1.0):
            raise ValueError("free energy at m = +-1 is not defined for a tabulated backend")
        h = self.field_for_magnetization(m)
        out = h * m - self.pressure(h)
        return out if out.ndim else float(out)


def potentials_table(backend, h_values):
    """Sample ``(h, pressure, magnetization)`` rows on a field grid."""
    h = np.asarray(h_values, dtype=float)
    return np.column_stack([h, backend.pressure(h), backend.magnetization(h)])
