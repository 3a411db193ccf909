import numpy as np
import pytest
from scipy.integrate import quad

from gravising import (
    ExplicitField,
    GravitationalField,
    LatticeGeometry,
    MesoProfile,
    continuum_gravity_profile,
    mean_magnetization_at_shift,
    optimal_profile,
    psi,
    random_compatible_profile,
    solve_hbar,
)


def test_geometry_validation():
    with pytest.raises(ValueError):
        LatticeGeometry(64, 2, 7)  # 7 does not divide 64
    geo = LatticeGeometry(64, 2, 8)
    assert geo.n_cells == 64
    assert geo.cells_per_axis == 8
    assert len(list(geo.cell_anchors())) == 64


def test_gravitational_witness():
    geo = LatticeGeometry(64, 2, 8)
    field = GravitationalField(geo, -1.5)
    assert field.b_n == pytest.approx(1.5 * 8 / 64)
    sites = field.site_values()
    # varies only along the height axis, linearly
    assert sites.shape == (64, 64)
    np.testing.assert_allclose(sites[3, :], -1.5 * np.arange(64) / 64)
    np.testing.assert_allclose(sites[:, 5], sites[0, 5])


def test_explicit_field_witness():
    geo = LatticeGeometry(8, 1, 2)
    field = ExplicitField(geo, np.array([0.0, 0.3, 0.1, 0.4]))
    assert field.b_n == pytest.approx(0.3, rel=1e-9)
    np.testing.assert_array_equal(field.site_values(), np.repeat([0.0, 0.3, 0.1, 0.4], 2))


def test_mean_magnetization_constant_field(exact1d):
    geo = LatticeGeometry(16, 2, 4)
    field = ExplicitField(geo, np.full((4, 4), 0.7))
    for h in (-0.5, 0.0, 1.2):
        assert mean_magnetization_at_shift(field, exact1d, h) == pytest.approx(
            exact1d.magnetization(0.7 - h), abs=1e-15
        )


def test_mean_magnetization_direct_sum_oracle(exact1d):
    geo = LatticeGeometry(64, 2, 8)
    field = GravitationalField(geo, -1.0)
    cells = field.cell_values()
    for h in (0.0, -0.3, 0.9):
        naive = np.mean([exact1d.magnetization(v - h) for v in cells.reshape(-1)])
        assert mean_magnetization_at_shift(field, exact1d, h) == pytest.approx(naive, abs=1e-12)


def test_mean_magnetization_saturation(exact1d):
    geo = LatticeGeometry(32, 1, 8)
    field = GravitationalField(geo, -1.0)
    assert mean_magnetization_at_shift(field, exact1d, 60.0) == pytest.approx(-1.0, abs=1e-12)
    assert mean_magnetization_at_shift(field, exact1d, -60.0) == pytest.approx(1.0, abs=1e-12)


def test_mean_magnetization_jump_interval(meanfield):
    # hitting a cell value in the coexistence regime returns the jump gap
    geo = LatticeGeometry(8, 1, 2)
    field = ExplicitField(geo, np.array([0.0, 0.0, 0.5, 1.0]))
    out = mean_magnetization_at_shift(field, meanfield, 0.0)
    assert isinstance(out, tuple)
    right, left = out
    mstar = meanfield.spontaneous_magnetization()
    assert left - right == pytest.approx(2.0 * mstar * 2 / 4, abs=1e-12)  # |cells at level|/|cells|
    assert right < left


def test_solve_hbar_gravitational_symmetry(backends):
    # m = 0 with a linear field: the shift sits at g/2 for every even backend
    geo = LatticeGeometry(64, 1, 8)
    field = GravitationalField(geo, -1.0)
    for name, backend in backends.items():
        hbar = solve_hbar(field, backend, 0.0, tol=1e-10)
        assert hbar == pytest.approx(-0.5, abs=1e-9), name


def test_solve_hbar_constant_field(exact1d):
    geo = LatticeGeometry(16, 2, 4)
    c = 0.8
    field = ExplicitField(geo, np.full((4, 4), c))
    m = 0.55
    hbar = solve_hbar(field, exact1d, m, tol=1e-12)
    assert hbar == pytest.approx(c - exact1d.field_for_magnetization(m), abs=1e-10)


def test_solve_hbar_inside_jump_gap(meanfield):
    # explicit two-level field {0, delta}; m chosen inside the gap at level 0
    geo = LatticeGeometry(8, 1, 4)
    delta = 0.2
    field = ExplicitField(geo, np.array([0.0, delta]))
    mstar = meanfield.spontaneous_magnetization()
    # plateau endpoints of the cell average at h = 0 (independent evaluation)
    upper = 0.5 * (mstar + meanfield.magnetization(delta))
    lower = 0.5 * (-mstar + meanfield.magnetization(delta))
    m = 0.5 * (upper + lower)
    assert lower < m < upper
    assert solve_hbar(field, meanfield, m, tol=1e-10) == pytest.approx(0.0, abs=1e-9)


def test_solve_hbar_domain_error(exact1d):
    geo = LatticeGeometry(8, 1, 4)
    field = GravitationalField(geo, -1.0)
    with pytest.raises(ValueError):
        solve_hbar(field, exact1d, 1.0)


def test_optimal_profile_constant_field_is_uniform(exact1d, meanfield):
    geo = LatticeGeometry(16, 2, 4)
    field = ExplicitField(geo, np.full((4, 4), 0.3))
    for backend, m in ((exact1d, 0.4), (meanfield, 0.2)):
        sol = optimal_profile(field, backend, m)
        np.testing.assert_allclose(sol.profile.values, m, rtol=0, atol=1e-11)
        assert sol.profile.compatible


def test_optimal_profile_compatibility_and_isotherm(backends):
    geo = LatticeGeometry(64, 1, 8)
    field = GravitationalField(geo, -1.0)
    for name, backend in backends.items():
        for m in (-0.5, 0.0, 0.4):
            sol = optimal_profile(field, backend, m)
            assert sol.profile.compatible, (name, m)
            off = ~sol.plateau_mask
            np.testing.assert_allclose(
                sol.profile.values[off],
                backend.magnetization(field.cell_values()[off] - sol.hbar),
                rtol=0,
                atol=1e-12,
            )


def test_optimal_profile_plateau_case(meanfield):
    # odd cell count puts one cell exactly at midheight; m = 0 lands in its gap
    geo = LatticeGeometry(40, 1, 8)
    field = GravitationalField(geo, -1.0)
    sol = optimal_profile(field, meanfield, 0.0)
    assert sol.hbar == pytest.approx(-0.5, abs=1e-12)
    assert sol.n_plateau_cells == 1
    heights = (np.arange(5) * 8 + 4) / 40
    assert heights[sol.plateau_mask] == pytest.approx(0.5)
    mstar = meanfield.spontaneous_magnetization()
    assert -mstar <= sol.plateau_value <= mstar
    assert sol.plateau_value == pytest.approx(0.0, abs=1e-12)
    assert sol.profile.compatible


def test_plateau_mass_balance(meanfield):
    geo = LatticeGeometry(40, 1, 8)
    field = GravitationalField(geo, -1.0)
    for m in (0.0, 0.1):
        sol = optimal_profile(field, meanfield, m)
        if sol.n_plateau_cells == 0:
            continue
        interval = mean_magnetization_at_shift(field, meanfield, sol.hbar)
        left = interval[1]
        mstar = meanfield.spontaneous_magnetization()
        balance = sol.n_plateau_cells * (sol.plateau_value - mstar)
        assert balance == pytest.approx(geo.n_cells * (m - left), abs=1e-10)


def test_psi_uniform_zero_field(exact1d):
    geo = LatticeGeometry(16, 2, 4)
    field = ExplicitField(geo, np.zeros((4, 4)))
    m = 0.3
    profile = MesoProfile(geo, np.full((4, 4), m), target_m=m)
    assert psi(field, exact1d, profile) == pytest.approx(-exact1d.free_energy(m), abs=1e-14)


def test_psi_shift_identity(exact1d):
    # shifting the field by a constant moves Psi by -shift * m on compatible profiles
    geo = LatticeGeometry(32, 1, 8)
    field = GravitationalField(geo, -1.0)
    rng = np.random.default_rng(5)
    m = 0.25
    q = random_compatible_profile(geo, m, rng)
    hbar = 0.37
    shifted = ExplicitField(geo, field.cell_values() - hbar)
    assert psi(shifted, exact1d, q) == pytest.approx(
        psi(field, exact1d, q) - hbar * m, abs=1e-12
    )


def test_maximality_against_random_profiles(backends):
    geo = LatticeGeometry(64, 1, 8)
    field = GravitationalField(geo, -1.0)
    rng = np.random.default_rng(42)
    for name, backend in backends.items():
        for m in (-0.3, 0.2):
            sol = optimal_profile(field, backend, m)
            for _ in range(200):
                q = random_compatible_profile(geo, m, rng, low=-0.95, high=0.95)
                assert psi(field, backend, q) <= sol.psi_value + 1e-9, (name, m)


def test_single_cell_perturbation_strictly_decreases(exact1d):
    # compatibility-preserving perturbation of two off-plateau cells
    geo = LatticeGeometry(64, 1, 8)
    field = GravitationalField(geo, -1.0)
    sol = optimal_profile(field, exact1d, 0.2)
    base = sol.psi_value
    eps = 1e-3
    for i, j in ((0, 3), (2, 7), (5, 6)):
        values = sol.profile.values.copy()
        values[i] += eps
        values[j] -= eps
        perturbed = MesoProfile(geo, values, target_m=0.2)
        assert psi(field, exact1d, perturbed) < base - 1e-12


def test_random_compatible_profile_mean():
    geo = LatticeGeometry(64, 2, 8)
    rng = np.random.default_rng(0)
    q = random_compatible_profile(geo, 0.37, rng)
    assert abs(q.mean - 0.37) <= 1e-13
    assert q.compatible


def test_continuum_symmetric_interface(meanfield):
    sol = continuum_gravity_profile(meanfield, -1.0, 0.0, tol=1e-10)
    assert sol.hbar == pytest.approx(-0.5, abs=1e-10)
    assert sol.interface_height == pytest.approx(0.5, abs=1e-10)


def test_continuum_no_interface_in_uniqueness_regime(exact1d):
    sol = continuum_gravity_profile(exact1d, -1.0, 0.0, tol=1e-10)
    assert sol.interface_height is None


def test_continuum_profile_integrates_to_m(exact1d):
    for m in (-0.5, 0.0, 0.4):
        sol = continuum_gravity_profile(exact1d, -1.0, m, tol=1e-12)
        val, _ = quad(lambda s: float(sol.profile_fn(s)), 0.0, 1.0, limit=200, epsabs=1e-12)
        assert val == pytest.approx(m, abs=1e-8)


def test_continuum_hbar_grid_scan_oracle(exact1d):
    g, m = -1.0, 0.4
    sol = continuum_gravity_profile(exact1d, g, m, tol=1e-10)
    h = np.arange(-2.0, 2.0, 1e-6)
    resid = exact1d.pressure(g - h) - exact1d.pressure(-h) - m * g
    k = int(np.argmin(np.abs(resid)))
    assert sol.hbar == pytest.approx(h[k], abs=2e-6)


def test_continuum_rejects_degenerate_field(exact1d):
    with pytest.raises(ValueError):
        continuum_gravity_profile(exact1d, 0.0, 0.2)


def test_discrete_profile_tracks_continuum(exact1d):
    # midpoint cell convention keeps the coarse solution near the continuum one
    geo = LatticeGeometry(128, 1, 8)
    field = GravitationalField(geo, -1.0)
    discrete = optimal_profile(field, exact1d, 0.4)
    continuum = continuum_gravity_profile(exact1d, -1.0, 0.4, tol=1e-12)
    heights = (np.arange(16) * 8 + 4) / 128
    sup = np.max(np.abs(discrete.profile.values - continuum.profile_fn(heights)))
    assert sup <= 5e-3
