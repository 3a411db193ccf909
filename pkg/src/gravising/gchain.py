"""Dirichlet Gaussian chains: exact kernels, conditioning, sampling, limits.

The chain ``phi_0 = phi_{n+1} = 0`` with interior sites ``1..n`` has
density proportional to

    exp( -(1/4) sum_{i=1}^{n+1} (phi_i - phi_{i-1})^2
         - (mass^2/2) sum_i phi_i^2 ),

i.e. a tridiagonal precision matrix ``tridiag(-1/2, 1 + mass^2, -1/2)``.
Its covariance has the closed form (``i <= j``)

    G(i, j) = 2 sinh(nu i) sinh(nu (n+1-j)) / (sinh(nu) sinh(nu (n+1)))

with inverse correlation length ``nu = log(1 + mass^2 + sqrt(2 mass^2 +
mass^4))``, degenerating to ``2 i (1 - j/(n+1))`` in the massless case.
All sinh ratios are evaluated in log space so that ``nu * n`` far beyond
the overflow point of ``sinh`` stays exact to rounding.

Conditioning on zero signed area ``X = sum_i phi_i`` is a rank-one Schur
update ``G - s s^T / E[X^2]`` with ``s_i = E[X phi_i]``; both moments have
closed forms (polynomial for mass 0, geometric sums otherwise).

With ``mass = g / sqrt(n)``, windows of width ``sqrt(n)`` around the
middle of the chain, rescaled by ``n^{1/4}`` in height, converge to the
stationary Ornstein-Uhlenbeck process with covariance
``exp(-sqrt(2) g |dt|) / (sqrt(2) g)`` -- conditioned or not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky_banded, solve_banded

__all__ = [
    "GaussianChain",
    "BridgeScaling",
    "WindowScaling",
    "CovarianceKernel",
    "nu",
    "covariance",
    "covariance_bounds_check",
    "area_covariances",
    "conditioned_covariance",
    "sample",
    "rescaled_covariance",
    "ou_covariance",
    "gradient_moment_check",
    "canonical_covariance_agreement",
]


@dataclass(frozen=True)
class GaussianChain:
    """Dirichlet chain with ``n`` interior sites and mass ``mass >= 0``.

    ``constrained=True`` selects the law conditioned on zero signed area.
    """

    n: int
    mass: float = 0.0
    constrained: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("chain needs at least one interior site")
        if not (np.isfinite(self.mass) and self.mass >= 0.0):
            raise ValueError("mass must be a finite non-negative number")


def nu(mass) -> float:
    """Inverse correlation length ``log(1 + m^2 + sqrt(2 m^2 + m^4))``."""
    m2 = np.asarray(mass, dtype=float) ** 2
    if np.any(m2 < 0.0) or not np.all(np.isfinite(m2)):
        raise ValueError("mass must be finite and non-negative")
    out = np.log1p(m2 + np.sqrt(2.0 * m2 + m2 * m2))
    return out if out.ndim else float(out)


def _log_sinh(x):
    """log(sinh(x)) for x > 0, stable for small and huge arguments."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return x + np.log(-np.expm1(-2.0 * x)) - np.log(2.0)


def _check_indices(n, *indices):
    for idx in indices:
        arr = np.asarray(idx)
        if np.any(arr < 1) or np.any(arr > n):
            raise IndexError(f"chain index outside 1..{n}")


def covariance(chain: GaussianChain, i, j):
    """Unconditioned covariance ``E[phi_i phi_j]`` from the closed form."""
    _check_indices(chain.n, i, j)
    i = np.asarray(i, dtype=float)
    j = np.asarray(j, dtype=float)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    n1 = chain.n + 1.0
    if chain.mass == 0.0:
        out = 2.0 * lo * (1.0 - hi / n1)
    else:
        v = nu(chain.mass)
        out = 2.0 * np.exp(
            _log_sinh(v * lo) + _log_sinh(v * (n1 - hi)) - _log_sinh(v) - _log_sinh(v * n1)
        )
    return out if out.ndim else float(out)


def covariance_bounds_check(chain: GaussianChain, i: int, j: int):
    """Sandwich ``lower <= G(i, j) <= upper`` for the massive chain.

    The bounds replace the boundary sinh factors by their exponential
    envelopes; they are universal over ``1 <= i <= j <= n``.
    """
    if chain.mass == 0.0:
        raise ValueError("covariance bounds apply to the massive chain only")
    if j < i:
        raise ValueError("bounds expect i <= j")
    _check_indices(chain.n, i, j)
    v = nu(chain.mass)
    n1 = chain.n + 1
    core = math.exp(-v * (j - i) - _log_sinh(v))
    lower = -math.expm1(-2.0 * v * i) * -math.expm1(-2.0 * v * (n1 - j)) * core
    upper = core / -math.expm1(-2.0 * v * n1)
    value = covariance(chain, i, j)
    if not (lower <= value * (1 + 1e-12) and value <= upper * (1 + 1e-12)):
        raise AssertionError(f"covariance {value} escapes [{lower}, {upper}]")
    return lower, value, upper


@lru_cache(maxsize=64)
def _area_moments(n: int, mass: float):
    """(E[X phi_i] for i = 1..n, E[X^2]); cached per chain law."""
    if mass == 0.0:
        i = np.arange(1, n + 1, dtype=float)
        xphi = i * (n + 1.0 - i)
        xx = float(n * (n + 1) * (n + 2) // 6)
        return xphi, xx
    v = nu(mass)
    i = np.arange(1, n + 1, dtype=float)
    n1 = n + 1.0

    def log_sinh_sum(k):
        # sum_{j=1}^{k} sinh(nu j) = sinh(nu (k+1)/2) sinh(nu k/2) / sinh(nu/2)
        k = np.asarray(k, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = _log_sinh(v * (k + 1.0) / 2.0) + _log_sinh(v * k / 2.0) - _log_sinh(v / 2.0)
        return np.where(k < 1.0, -np.inf, out)

    denom = _log_sinh(v) + _log_sinh(v * n1)
    t1 = _log_sinh(v * (n1 - i)) + log_sinh_sum(i)
    t2 = _log_sinh(v * i) + log_sinh_sum(n - i)
    xphi = 2.0 * np.exp(np.logaddexp(t1, t2) - denom)
    return xphi, float(xphi.sum())


def area_covariances(chain: GaussianChain):
    """Signed-area moments ``(E[X phi_i] vector, E[X^2])``.

    Massless case by the polynomial closed forms, massive case by the
    geometric closed form of the covariance row sums.
    """
    xphi, xx = _area_moments(chain.n, chain.mass)
    return xphi.copy(), xx


def conditioned_covariance(chain: GaussianChain, i, j):
    """Covariance of the chain conditioned on zero signed area."""
    _check_indices(chain.n, i, j)
    xphi, xx = _area_moments(chain.n, chain.mass)
    if not xx > 0.0:
        raise ValueError("degenerate signed-area variance")
    i = np.asarray(i)
    j = np.asarray(j)
    out = covariance(chain, i, j) - xphi[i - 1] * xphi[j - 1] / xx
    return out if out.ndim else float(out)


def _kernel_entry(chain: GaussianChain, i, j):
    if chain.constrained:
        return conditioned_covariance(chain, i, j)
    return covariance(chain, i, j)


@dataclass(frozen=True)
class CovarianceKernel:
    """Callable kernel honoring the chain's conditioning flag."""

    chain: GaussianChain

    def __call__(self, i, j):
        return _kernel_entry(self.chain, i, j)

    def matrix(self, indices) -> np.ndarray:
        idx = np.asarray(indices)
        return np.asarray(_kernel_entry(self.chain, idx[:, None], idx[None, :]), dtype=float)


def _precision_banded(n: int, mass: float) -> np.ndarray:
    """Upper banded (2, n) storage of tridiag(-1/2, 1 + mass^2, -1/2)."""
    ab = np.zeros((2, n))
    ab[0, 1:] = -0.5
    ab[1, :] = 1.0 + mass * mass
    return ab


def sample(chain: GaussianChain, seed: int, count: int, start: int = 0) -> np.ndarray:
    """Draw ``count`` exact field samples; returns shape ``(count, n)``.

    Innovations come from counter-based Philox streams: sample ``k`` of
    the run uses the stream keyed by ``seed`` at counter block
    ``start + k``, so disjoint batches of the same run can be produced in
    parallel (or out of order) and still agree sample for sample.  The
    tridiagonal precision is Cholesky-factorized once and each sample is
    a banded triangular solve; zero-area conditioning subtracts the exact
    projection ``(X / E[X^2]) E[X phi]`` from each sample.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if start < 0:
        raise ValueError("start must be >= 0")
    n = chain.n
    u_fact = cholesky_banded(_precision_banded(n, chain.mass), lower=False)
    z = np.empty((n, count))
    for k in range(count):
        counter = np.array([0, start + k, 0, 0], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=seed, counter=counter))
        z[:, k] = rng.standard_normal(n)
    # Q = U^T U  =>  phi = U^{-1} z has covariance Q^{-1}
    phi = solve_banded((0, 1), u_fact, z)
    if chain.constrained:
        xphi, xx = _area_moments(n, chain.mass)
        areas = phi.sum(axis=0)
        phi -= np.outer(xphi, areas / xx)
    return phi.T


@dataclass(frozen=True)
class BridgeScaling:
    """Diffusive scaling: space 1/n, height 1/sqrt(n), t in [0, 1]."""


@dataclass(frozen=True)
class WindowScaling:
    """Window around the chain middle: space 1/sqrt(n), height 1/n^{1/4}.

    Requires an even chain with ``mass = g / sqrt(n)`` for the stored
    ``g``; defined for real ``t`` as long as the window stays inside the
    chain.
    """

    g: float

    def __post_init__(self):
        if not (np.isfinite(self.g) and self.g > 0.0):
            raise ValueError("window scaling requires g > 0")


def _interp_indices(pos: float, n: int):
    """Interpolation nodes and weights for a fractional index position."""
    lo = math.floor(pos)
    frac = pos - lo
    if lo < 0 or lo + 1 > n + 1:
        raise ValueError(f"rescaled time maps to index {pos:.3f} outside the chain")
    return (lo, lo + 1), (1.0 - frac, frac)


def _scaled_position(chain: GaussianChain, scaling, t: float) -> float:
    if isinstance(scaling, BridgeScaling):
        if not 0.0 <= t <= 1.0:
            raise ValueError("bridge scaling is defined for t in [0, 1]")
        return t * chain.n
    if isinstance(scaling, WindowScaling):
        if chain.n % 2 != 0:
            raise ValueError("window scaling assumes an even chain size")
        expected = scaling.g / math.sqrt(chain.n)
        if not math.isclose(chain.mass, expected, rel_tol=1e-9, abs_tol=0.0):
            raise ValueError(
                f"window scaling with g={scaling.g} expects mass g/sqrt(n)={expected!r}"
            )
        return chain.n / 2 + t * math.sqrt(chain.n)
    raise TypeError(f"unknown scaling {scaling!r}")


def rescaled_covariance(chain: GaussianChain, scaling, t1: float, t2: float) -> float:
    """Exact covariance of the linearly interpolated rescaled process."""
    n = chain.n
    nodes1, w1 = _interp_indices(_scaled_position(chain, scaling, t1), n)
    nodes2, w2 = _interp_indices(_scaled_position(chain, scaling, t2), n)
    acc = 0.0
    for a, wa in zip(nodes1, w1):
        for b, wb in zip(nodes2, w2):
            if wa == 0.0 or wb == 0.0:
                continue
            if a < 1 or a > n or b < 1 or b > n:
                continue  # boundary sites are pinned to zero
            acc += wa * wb * float(_kernel_entry(chain, a, b))
    if isinstance(scaling, BridgeScaling):
        return acc / n
    return acc / math.sqrt(n)


def ou_covariance(g: float, t1: float, t2: float) -> float:
    """Stationary OU covariance ``exp(-sqrt(2) g |t2 - t1|) / (sqrt(2) g)``."""
    if not g > 0.0:
        raise ValueError("the OU limit requires g > 0")
    s2g = math.sqrt(2.0) * g
    return math.exp(-s2g * abs(t2 - t1)) / s2g


def gradient_moment_check(chain: GaussianChain, i: int, j: int):
    """Fourth moment of ``phi_i - phi_j`` and its universal bound ``12 (i-j)^2``.

    Gaussianity gives ``E[|d|^4] = 3 E[|d|^2]^2``; the second moment is
    largest in the massless case, where it equals ``2 |i-j| (1 - |i-j|/(n+1))``.
    """
    _check_indices(chain.n, i, j)
    second = covariance(chain, i, i) + covariance(chain, j, j) - 2.0 * covariance(chain, i, j)
    fourth = 3.0 * second * second
    bound = 12.0 * float(i - j) ** 2
    if fourth > bound * (1.0 + 1e-12):
        raise AssertionError(f"gradient moment {fourth} exceeds bound {bound}")
    return fourth, bound


def canonical_covariance_agreement(
    chain: GaussianChain, i: int, j: int, window_exponent: float = 0.6, window_width: float = 10.0
) -> float:
    """Relative deviation between conditioned and unconditioned kernels.

    Valid in the bulk window ``n^b <= i <= j <= n - n^b`` with
    ``|i - j| <= width * sqrt(n)``; decays like ``n^{-1/2}`` there.
    """
    if chain.mass <= 0.0:
        raise ValueError("agreement is defined for the massive chain")
    n = chain.n
    edge = n**window_exponent
    if not (edge <= min(i, j) and max(i, j) <= n - edge):
        raise ValueError(f"indices must lie in the bulk window [{edge:.0f}, {n - edge:.0f}]")
    if abs(i - j) > window_width * math.sqrt(n):
        raise ValueError("index separation exceeds the diffusive window")
    base = covariance(chain, i, j)
    cond = conditioned_covariance(chain, i, j)
    return abs(cond - base) / base
