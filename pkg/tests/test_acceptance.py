"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines and
timings.  Criterion 4 is known to be unattainable for the constrained
ensemble at g = 0.5 (see the failing parametrized case): at n = 4096 the
zero-area conditioning shifts the rescaled covariance by about
sqrt(2)/(g sqrt(n)) ~ 4.4%, three times the stated 2% budget.  The case
is asserted faithfully and left red on purpose.
"""

import itertools
import time

import numpy as np
import pytest
from scipy.integrate import quad

import gravising as gi
from gravising import (
    Boundary,
    CanonicalSampler,
    Exact1D,
    ExplicitField,
    GaussianChain,
    GravitationalField,
    LatticeGeometry,
    MeanField,
    MesoProfile,
    SpinConfiguration,
    Tabulated,
    WindowScaling,
    area_covariances,
    canonical_covariance_agreement,
    coarse_grain,
    concentration_distance,
    conditioned_covariance,
    continuum_gravity_profile,
    covariance,
    energy,
    gradient_moment_check,
    interface_height_estimate,
    layered_configuration,
    minimize_droplet,
    optimal_profile,
    ou_covariance,
    quantize_magnetization,
    random_compatible_profile,
    rescaled_covariance,
    solve_hbar,
    tabulate_isotherm,
)
from gravising.droplet import SurfaceTension, ellipse_polygon, polygon_area
from conftest import dense_chain_covariance


def report(number, ok, detail):
    print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}")


def test_criterion_1_kernel_exactness():
    # the relative comparison is shielded below 1e-280: at mass 5 the far
    # corner entries underflow toward 5e-323 where float64 carries no
    # relative precision for either side of the comparison
    t0 = time.time()
    worst = 0.0
    for mass in (0.0, 1e-3, 0.1, 1.0, 5.0):
        for n in range(1, 201):
            chain = GaussianChain(n, mass)
            oracle = dense_chain_covariance(n, mass)
            idx = np.arange(1, n + 1)
            kernel = covariance(chain, idx[:, None], idx[None, :])
            rel = np.abs(kernel - oracle) / np.maximum(np.abs(oracle), 1e-280)
            worst = max(worst, float(np.max(rel)))
    elapsed = time.time() - t0
    ok = worst < 1e-10 and elapsed < 30.0
    report(1, ok, f"closed form vs dense inverse: max rel err {worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-10
    assert elapsed < 30.0


def test_criterion_2_signed_area_identities():
    exact = True
    for n in range(1, 1001):
        xphi, xx = area_covariances(GaussianChain(n, 0.0))
        i = np.arange(1, n + 1, dtype=np.int64)
        exact = exact and np.array_equal(xphi.astype(np.int64), i * (n + 1 - i))
        exact = exact and int(xx) == n * (n + 1) * (n + 2) // 6 and float(int(xx)) == xx
    worst = 0.0
    for n, mass in ((3, 1e-3), (17, 0.2), (64, 1.0), (200, 5.0), (50, 0.2)):
        xphi, xx = area_covariances(GaussianChain(n, mass))
        oracle = dense_chain_covariance(n, mass)
        worst = max(worst, float(np.max(np.abs(xphi - oracle.sum(axis=1)) / oracle.sum(axis=1))))
        worst = max(worst, abs(xx - oracle.sum()) / oracle.sum())
    ok = exact and worst < 1e-10
    report(2, ok, f"massless identities exact to n=1000; massive row sums rel err {worst:.2e}")
    assert exact
    assert worst < 1e-10


def test_criterion_3_conditioned_massless_limit():
    n = 1000
    chain = GaussianChain(n, 0.0)
    ts = np.arange(1, 6) / 6.0
    worst = 0.0
    for t1 in ts:
        for t2 in ts:
            if t2 < t1:
                continue
            i, j = int(t1 * n), int(t2 * n)
            got = conditioned_covariance(chain, i, j) / n
            want = 2 * t1 * (1 - t2) - 6 * t1 * t2 * (1 - t1) * (1 - t2)
            worst = max(worst, abs(got - want))
    ok = worst < 1e-2
    report(3, ok, f"conditioned massless kernel vs limit on 5x5 grid: max err {worst:.2e}")
    assert worst < 1e-2


_T_GRID = np.linspace(-0.5, 0.5, 5)


@pytest.mark.parametrize("constrained", [False, True], ids=["grand-canonical", "canonical"])
@pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
def test_criterion_4_ou_convergence(g, constrained):
    n = 4096
    chain = GaussianChain(n, g / np.sqrt(n), constrained=constrained)
    scaling = WindowScaling(g)
    worst = 0.0
    for t1 in _T_GRID:
        for dt in np.linspace(0.0, 1.0, 5):
            got = rescaled_covariance(chain, scaling, float(t1), float(t1 + dt))
            worst = max(worst, abs(got - ou_covariance(g, t1, t1 + dt)))
    ok = worst <= 0.02
    label = "canonical" if constrained else "grand-canonical"
    report(4, ok, f"OU limit, {label}, g={g}: max |deviation| {worst:.4f} (<= 0.02)")
    assert worst <= 0.02


def test_criterion_4_rate_slope():
    t0 = time.time()
    g = 1.0
    sizes = [2**k for k in range(10, 17)]
    devs = []
    for n in sizes:
        chain = GaussianChain(n, g / np.sqrt(n))
        devs.append(
            canonical_covariance_agreement(chain, n // 2, n // 2 + int(0.25 * np.sqrt(n)))
        )
    slope = float(np.polyfit(np.log(sizes), np.log(devs), 1)[0])
    elapsed = time.time() - t0
    ok = 0.3 <= -slope <= 0.7 and elapsed < 120.0
    report(4, ok, f"canonical/grand-canonical deviation slope {slope:.3f} over n=2^10..2^16, {elapsed:.1f}s")
    assert 0.3 <= -slope <= 0.7
    assert elapsed < 120.0


def test_criterion_5_gradient_moment_bound():
    violations = 0
    for mass in (0.0, 0.3, 2.0):
        chain = GaussianChain(60, mass)
        for i in range(1, 61):
            for j in range(i, 61):
                fourth, bound = gradient_moment_check(chain, i, j)
                if fourth > bound * (1 + 1e-12):
                    violations += 1
    ok = violations == 0
    report(5, ok, f"fourth-moment bound sweep n=60, masses (0, 0.3, 2): {violations} violations")
    assert violations == 0


def _psi_batch(field, backend, profiles):
    h = field.cell_values().reshape(-1)
    return np.mean(h * profiles - backend.free_energy(profiles), axis=1)


def test_criterion_6_profile_maximality(backends):
    geo = LatticeGeometry(64, 1, 8)
    rng = np.random.default_rng(2024)
    smooth = ExplicitField(geo, 0.4 * np.sin(np.linspace(0.0, 2.0, 8)))
    fields = {
        "gravitational": GravitationalField(geo, -1.0),
        "smooth-explicit": smooth,
        "constant": ExplicitField(geo, np.full(8, 0.3)),
    }
    worst_gap = -np.inf
    for (bname, backend), (fname, field), m in itertools.product(
        backends.items(), fields.items(), (-0.5, 0.0, 0.4)
    ):
        sol = optimal_profile(field, backend, m)
        qs = np.stack(
            [random_compatible_profile(geo, m, rng).values for _ in range(1000)]
        )
        gap = float(np.max(_psi_batch(field, backend, qs)) - sol.psi_value)
        worst_gap = max(worst_gap, gap)
        assert gap <= 1e-9, (bname, fname, m)
    report(6, True, f"Psi(q*) maximal over 27 combos x 1000 random profiles; worst gap {worst_gap:.2e}")


def test_criterion_7_symmetric_interface():
    backend = MeanField(1.0, d=2)
    assert backend.spontaneous_magnetization() > 0.0
    geo = LatticeGeometry(64, 1, 8)
    field = GravitationalField(geo, -1.0)
    hbar = solve_hbar(field, backend, 0.0, tol=1e-10)
    continuum = continuum_gravity_profile(backend, -1.0, 0.0, tol=1e-9)
    err_h = abs(hbar - (-0.5))
    err_i = abs(continuum.interface_height - 0.5)
    ok = err_h <= 1e-8 and err_i <= 1e-8
    report(7, ok, f"m=0 shift err {err_h:.2e}, interface height err {err_i:.2e}")
    assert err_h <= 1e-8
    assert err_i <= 1e-8


def test_criterion_8_continuum_consistency():
    backend = Exact1D(1.0)
    g = -1.0
    worst_int = 0.0
    worst_sup = 0.0
    geo = LatticeGeometry(512, 1, 16)
    field = GravitationalField(geo, g)
    heights = (np.arange(32) * 16 + 8) / 512.0
    for m in (-0.5, 0.0, 0.4):
        continuum = continuum_gravity_profile(backend, g, m, tol=1e-12)
        integral, _ = quad(
            lambda s: float(continuum.profile_fn(s)), 0.0, 1.0, limit=200, epsabs=1e-12
        )
        worst_int = max(worst_int, abs(integral - m))
        discrete = optimal_profile(field, backend, m)
        off = ~discrete.plateau_mask
        sup = float(
            np.max(np.abs(discrete.profile.values[off] - continuum.profile_fn(heights[off])))
        )
        worst_sup = max(worst_sup, sup)
    ok = worst_int <= 1e-8 and worst_sup <= 2e-2
    report(8, ok, f"profile integral err {worst_int:.2e}, discrete-vs-continuum sup {worst_sup:.2e}")
    assert worst_int <= 1e-8
    assert worst_sup <= 2e-2


def _sector_states(geo, m_total):
    volume = geo.n_sites
    n_minus = (volume - m_total) // 2
    states = []
    for minus in itertools.combinations(range(volume), n_minus):
        spins = np.ones(volume, dtype=np.int8)
        spins[list(minus)] = -1
        states.append(spins)
    return states


def test_criterion_9_sampler_law():
    t0 = time.time()
    geo = LatticeGeometry(3, 2, 1)
    beta = 0.4
    m_total = 1  # 126-state sector C(9, 4)
    states = _sector_states(geo, m_total)
    energies = np.array(
        [energy(SpinConfiguration(geo, s.reshape(3, 3), Boundary.free())) for s in states]
    )
    weights = np.exp(-beta * (energies - energies.min()))
    pi = weights / weights.sum()

    config = gi.random_configuration(geo, m_total, seed=77)
    sampler = CanonicalSampler(config, beta, None, seed=78, proposal="any")
    counts = sampler.run_with_state_tally(10_000_000)
    emp = np.array(
        [counts[int(sum(1 << v for v in range(9) if s[v] == 1))] for s in states], dtype=float
    )
    assert emp.sum() == 10_000_000  # the chain never leaves the sector
    tv = 0.5 * float(np.abs(emp / emp.sum() - pi).sum())

    # entrywise detailed balance of the assembled transition matrix
    index = {s.tobytes(): k for k, s in enumerate(states)}
    volume = geo.n_sites
    prob = 2.0 / volume**2
    t = np.zeros((len(states), len(states)))
    for k, s in enumerate(states):
        for i in range(volume):
            for j in range(i + 1, volume):
                if s[i] == s[j]:
                    continue
                s2 = s.copy()
                s2[i], s2[j] = s2[j], s2[i]
                k2 = index[s2.tobytes()]
                t[k, k2] += prob * min(1.0, np.exp(-beta * (energies[k2] - energies[k])))
    flux = pi[:, None] * t
    db_err = float(np.max(np.abs(flux - flux.T))) / float(flux.max())
    elapsed = time.time() - t0
    ok = tv <= 0.02 and db_err <= 1e-12 and elapsed < 60.0
    report(9, ok, f"TV distance {tv:.4f} (<= 0.02), detailed balance err {db_err:.1e}, {elapsed:.1f}s")
    assert tv <= 0.02
    assert db_err <= 1e-12
    assert elapsed < 60.0


def _averaged_profile_distance(n_side, cell, beta, g, m, seed, equil=400, measure=500):
    backend = Exact1D(beta)
    geo = LatticeGeometry(n_side, 1, cell)
    field = GravitationalField(geo, g)
    m_total = quantize_magnetization(m, geo)
    reference = optimal_profile(field, backend, m_total / geo.n_sites).profile
    sampler = CanonicalSampler(
        layered_configuration(geo, m_total), beta, field, seed=seed, proposal="any"
    )
    sampler.sweep(equil)
    acc = np.zeros(geo.n_cells)
    for _ in range(measure):
        sampler.sweep(1)
        acc += coarse_grain(sampler.config).values
    averaged = MesoProfile(geo, acc / measure, target_m=m_total / geo.n_sites)
    return concentration_distance(averaged, reference)


def test_criterion_10_concentration():
    t0 = time.time()
    # anchor run at the stated size: 400 equilibration + 4000 measurement sweeps
    anchor = _averaged_profile_distance(4096, 64, 0.7, -1.0, 0.2, seed=11, measure=4000)
    # size sweep on a fixed 64-cell coarse grid (cell side scales with N)
    sweep = [
        _averaged_profile_distance(n, n // 64, 0.7, -1.0, 0.2, seed=13)
        for n in (512, 1024, 2048, 4096)
    ]
    inversions = sum(1 for a, b in zip(sweep, sweep[1:]) if b >= a)
    elapsed = time.time() - t0
    ok = anchor <= 0.1 and inversions <= 1
    report(
        10,
        ok,
        f"anchor distance {anchor:.4f} (<= 0.1); sweep {['%.4f' % d for d in sweep]} "
        f"({inversions} inversions), {elapsed:.0f}s",
    )
    assert anchor <= 0.1
    assert inversions <= 1


def test_criterion_11_qualitative_layering():
    t0 = time.time()
    # m* estimate from the tabulated-backend pipeline at beta = 0.5
    h_grid = np.linspace(0.0, 2.0, 9)
    m_grid = tabulate_isotherm(0.5, h_grid, n_side=24, d=2, sweeps=300, burnin=100, seed=7)
    mstar_tab = Tabulated(0.5, h_grid, m_grid).spontaneous_magnetization()
    assert mstar_tab > 0.5

    profiles = {}
    for beta in (0.3, 0.5):
        geo = LatticeGeometry(256, 2, 16)
        field = GravitationalField(geo, -1.0)
        m_total = quantize_magnetization(0.4, geo)
        sampler = CanonicalSampler(
            layered_configuration(geo, m_total), beta, field, seed=31, proposal="any"
        )
        sampler.sweep(300)
        acc = np.zeros(geo.cell_shape)
        for _ in range(50):
            sampler.sweep(1)
            acc += coarse_grain(sampler.config).values
        profiles[beta] = MesoProfile(geo, acc / 50, target_m=m_total / geo.n_sites)

    col_03 = profiles[0.3].values.mean(axis=0)
    amp_03 = col_03[0] - col_03[-1]
    smooth = (
        amp_03 > 0.2
        and np.max(-np.diff(col_03)) / amp_03 <= 0.4  # no dominant single-layer jump
        and np.max(np.diff(col_03)) <= 0.02 + 0.05 * amp_03  # decreasing within noise
    )

    col_05 = profiles[0.5].values.mean(axis=0)
    jump = float(np.max(-np.diff(col_05)))
    detected = interface_height_estimate(profiles[0.5]) is not None
    elapsed = time.time() - t0
    ok = smooth and detected and jump >= mstar_tab
    report(
        11,
        ok,
        f"beta=0.3 smooth decrease: {smooth}; beta=0.5 interface detected: {detected}, "
        f"jump {jump:.2f} >= m*_tab {mstar_tab:.2f}, {elapsed:.0f}s",
    )
    assert smooth
    assert detected
    assert jump >= mstar_tab


def test_criterion_12_droplet():
    t0 = time.time()
    tau = SurfaceTension.isotropic()
    area, m_star = 0.08, 0.8
    r = np.sqrt(area / np.pi)
    init = ellipse_polygon((0.5, 0.5), (1.25 * r, 0.8 * r), 128)
    shape, trace = minimize_droplet(
        tau, 0.0, m_star, area, n_vertices=128, init=init, with_trace=True
    )
    per = float(np.sum(np.linalg.norm(np.roll(shape.polygon, -1, 0) - shape.polygon, axis=1)))
    iso_ratio = per**2 / (4.0 * np.pi * area)
    energy_err = abs(trace[-1] - 2.0 * np.sqrt(np.pi * area)) / (2.0 * np.sqrt(np.pi * area))

    base = minimize_droplet(tau, 0.0, m_star, area, n_vertices=128).centroid[1]
    centroids = [
        minimize_droplet(tau, gamma, m_star, area, n_vertices=128).centroid[1]
        for gamma in (2.0, 6.0, 30.0)
    ]
    monotone = centroids[0] < base and all(b < a for a, b in zip(centroids, centroids[1:]))
    elapsed = time.time() - t0
    ok = iso_ratio <= 1.001 and energy_err <= 0.002 and monotone
    report(
        12,
        ok,
        f"isoperimetric ratio {iso_ratio:.5f} (<= 1.001), energy err {energy_err:.2e} (<= 0.2%), "
        f"centroids {['%.3f' % c for c in [base] + centroids]} monotone: {monotone}, {elapsed:.0f}s",
    )
    assert iso_ratio <= 1.001
    assert energy_err <= 0.002
    assert monotone
