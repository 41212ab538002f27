import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relscatter.errors import ConfigError, GridMismatchError, InstabilityError, StabilityError
from relscatter.fdtd import (
    DEFECT_TOL, GridSpec, build_propagator, evolve, first_derivative_apply, max_stable_dt,
    sample_potential, second_derivative_apply, stability_bound,
)
from relscatter.physics import BarrierSpec, ParticleSpec
from relscatter.wavepacket import InitialGaussian, SpinorField, charge_density

PS = ParticleSpec()
FREE = BarrierSpec("rectangular", 0.0, 10.0)


def make_grid(equation="kg", length=200.0, n=2048, v_max=0.0, frac=1.0, **kw):
    dx = length / n
    return GridSpec(length, n, frac * max_stable_dt(equation, PS, dx, v_max), **kw)


def gaussian_state(grid, equation, g=InitialGaussian(-20.0, 1.0, 4.0)):
    x = grid.x
    return SpinorField(x, g.upper_component(x), np.zeros(x.size, complex), 0.0, equation)


def discrete_exact_step(equation, phi, chi, dx, dt, steps=1):
    """exp(-i H_h t) in Fourier space using the stencil symbols (periodic grid)."""
    k = 2 * np.pi * np.fft.fftfreq(phi.size, dx)
    kh = k * dx
    d2 = (-30 + 32 * np.cos(kh) - 2 * np.cos(2 * kh)) / (12 * dx**2)
    d1 = (8 * np.sin(kh) - np.sin(2 * kh)) / (6 * dx)  # symbol of -i d/dx
    if equation == "kg":
        T = -0.5 * d2
        H = np.array([[T + 1, T], [-T, -T - 1]])
    else:
        one = np.ones_like(k)
        H = np.array([[one, d1], [d1, -one]])
    # traceless 2x2: exp(-i H t) = cos(w t) - i sin(w t) H / w, w^2 = -det H
    w = np.sqrt(-(H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0]) + 0j)
    t = dt * steps
    c, s = np.cos(w * t), np.sin(w * t) / w
    a, b = np.fft.fft(phi), np.fft.fft(chi)
    na = c * a - 1j * s * (H[0, 0] * a + H[0, 1] * b)
    nb = c * b - 1j * s * (H[1, 0] * a + H[1, 1] * b)
    return np.fft.ifft(na), np.fft.ifft(nb)


class TestStencils:
    x = np.linspace(-1.0, 1.0, 41)
    dx = x[1] - x[0]

    def test_exact_on_cubics_interior(self):
        f = 2 - 3 * self.x + self.x**2 + 0.5 * self.x**3
        d1 = first_derivative_apply(f, self.dx)
        d2 = second_derivative_apply(f, self.dx)
        np.testing.assert_allclose(d1[2:-2], (-3 + 2 * self.x + 1.5 * self.x**2)[2:-2], atol=1e-11)
        np.testing.assert_allclose(d2[2:-2], (2 + 3 * self.x)[2:-2], atol=1e-9)

    def test_constant_gives_zero_interior(self):
        f = np.full(20, 3.0)
        assert np.all(first_derivative_apply(f, 0.1)[2:-2] == 0)
        assert np.max(np.abs(second_derivative_apply(f, 0.1)[2:-2])) < 1e-12

    def test_too_short(self):
        with pytest.raises(ValueError):
            second_derivative_apply(np.zeros(4), 0.1)

    @pytest.mark.parametrize("apply,exact", [
        (first_derivative_apply, lambda x: np.cos(x)),
        (second_derivative_apply, lambda x: -np.sin(x)),
    ])
    def test_fourth_order(self, apply, exact):
        errs = []
        hs = []
        for n in (40, 80, 160):
            x = np.linspace(0, 2 * np.pi, n + 1)
            d = apply(np.sin(x), x[1] - x[0])
            errs.append(np.max(np.abs(d[2:-2] - exact(x)[2:-2])))
            hs.append(x[1] - x[0])
        order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert order == pytest.approx(4.0, abs=0.1)


class TestPotentialSampling:
    def test_edge_on_grid_point(self):
        spec = BarrierSpec("rectangular", 2.0, 1.0)
        x = np.array([-0.5, 0.0, 0.5, 1.0, 1.5])
        np.testing.assert_allclose(sample_potential(spec, x, 0.5), [0.0, 1.0, 2.0, 1.0, 0.0])

    def test_cell_average(self):
        spec = BarrierSpec("rectangular", 2.0, 1.0)
        # edge a quarter cell to the right of the sample
        assert sample_potential(spec, np.array([-0.125]), 1.0)[0] == pytest.approx(0.75)

    def test_smooth_point_samples(self):
        spec = BarrierSpec("smooth", 2.0, 10.0, 3.0)
        assert sample_potential(spec, np.array([5.0]), 0.5)[0] == pytest.approx(2.0, abs=1e-6)


class TestGrid:
    def test_validation(self):
        with pytest.raises(ConfigError):
            GridSpec(-1.0, 100, 0.01)
        with pytest.raises(ConfigError):
            GridSpec(1.0, 3, 0.01)
        with pytest.raises(ConfigError):
            GridSpec(1.0, 100, 0.0)

    def test_coordinates(self):
        g = GridSpec(10.0, 100, 0.01)
        assert g.dx == 0.1 and g.x[0] == -5.0 and g.x.size == 100
        assert GridSpec(10.0, 100, 0.01, x_min=2.0).x[0] == 2.0

    def test_cutoff_warning(self):
        g = GridSpec(100.0, 1000, 0.01)
        with pytest.warns(UserWarning):
            assert not g.check_cutoff(1.0)
        assert GridSpec(100.0, 100000, 0.01).check_cutoff(1.0)


class TestStability:
    @pytest.mark.parametrize("equation", ["kg", "dirac"])
    def test_rejects_large_dt(self, equation):
        dx = 0.1
        dt = 1.01 * max_stable_dt(equation, PS, dx, 3.4)
        with pytest.raises(StabilityError):
            build_propagator(equation, GridSpec(100.0, 1000, dt), BarrierSpec("rectangular", 3.4, 10.0), PS)

    def test_bound_values(self):
        dx = 0.05
        assert stability_bound("dirac", PS, dx, 0.0) == pytest.approx(np.hypot(1.0, 1.3722 / dx))
        assert stability_bound("kg", PS, dx, 2.0) == pytest.approx(np.sqrt(1 + (16 / 3) / dx**2) + 2.0)
        with pytest.raises(ConfigError):
            stability_bound("schrodinger", PS, dx, 0.0)

    @pytest.mark.parametrize("equation", ["kg", "dirac"])
    def test_pseudo_unitarity(self, equation):
        grid = make_grid(equation, v_max=3.4)
        prop = build_propagator(equation, grid, BarrierSpec("rectangular", 3.4, 20.0), PS)
        assert prop.defect <= DEFECT_TOL

    def test_taylor_order_adapts(self):
        grid = make_grid("dirac", n_taylor=2)
        prop = build_propagator("dirac", grid, FREE, PS)
        assert prop.n_taylor > 2 and prop.defect <= DEFECT_TOL

    def test_bad_options(self):
        grid = make_grid()
        with pytest.raises(ConfigError):
            build_propagator("kg", grid, FREE, PS, splitting="yoshida")
        with pytest.raises(ConfigError):
            build_propagator("heat", grid, FREE, PS)


@pytest.mark.parametrize("equation", ["kg", "dirac"])
def test_free_steps_match_fourier_oracle(equation):
    grid = make_grid(equation, length=200.0, n=2048)
    prop = build_propagator(equation, grid, FREE, PS)
    state = gaussian_state(grid, equation)
    out = prop.apply(state, 5)
    ref_phi, ref_chi = discrete_exact_step(equation, state.phi, state.chi, grid.dx, grid.dt, 5)
    assert np.max(np.abs(out.phi - ref_phi)) < 1e-8
    assert np.max(np.abs(out.chi - ref_chi)) < 1e-8
    assert out.t == pytest.approx(5 * grid.dt)


@pytest.mark.parametrize("equation", ["kg", "dirac"])
def test_zero_kinetic_gives_mass_phase(equation):
    # a spatially constant interior state only feels the rest-mass term
    grid = make_grid(equation, n=512)
    prop = build_propagator(equation, grid, FREE, PS)
    x = grid.x
    phi = np.exp(-(x / 30.0) ** 8).astype(complex)
    p, _ = prop.step(phi, np.zeros_like(phi))
    mid = np.abs(x) < 5
    np.testing.assert_allclose(p[mid], np.exp(-1j * grid.dt) * phi[mid], atol=1e-9)


@pytest.mark.parametrize("splitting", ["strang", "lie"])
def test_splitting_modes(splitting):
    grid = make_grid("dirac", n=1024)
    base = build_propagator("dirac", grid, FREE, PS)
    split = build_propagator("dirac", grid, FREE, PS, splitting=splitting)
    assert split.defect <= DEFECT_TOL
    state = gaussian_state(grid, "dirac")
    a = base.apply(state, 20)
    b = split.apply(state, 20)
    err = np.max(np.abs(a.phi - b.phi))
    # both approximate the same evolution; the split forms carry a splitting error
    assert err < (1e-2 if splitting == "lie" else 1e-3)


class TestEvolve:
    def test_zero_steps_returns_input(self):
        grid = make_grid()
        prop = build_propagator("kg", grid, FREE, PS)
        state = gaussian_state(grid, "kg")
        snaps = evolve(state, prop, steps=0)
        assert len(snaps) == 1
        assert np.array_equal(snaps[0].field.phi, state.phi)
        snaps = evolve(state, prop, snapshot_times=[0.0])
        assert np.array_equal(snaps[0].field.phi, state.phi)

    def test_snapshots_and_charge(self):
        grid = make_grid("dirac", n=2048, v_max=3.4)
        prop = build_propagator("dirac", grid, BarrierSpec("rectangular", 3.4, 20.0), PS)
        state = gaussian_state(grid, "dirac")
        snaps = evolve(state, prop, snapshot_times=[5.0, 10.0], monitor_every=50)
        assert [s.metadata["requested_t"] for s in snaps] == [5.0, 10.0]
        for s in snaps:
            assert abs(s.t - s.metadata["requested_t"]) <= 0.5 * grid.dt
            assert s.metadata["total_charge"] == pytest.approx(s.metadata["initial_charge"], abs=1e-9)
        assert snaps[-1].metadata["charge_history"]

    def test_kg_charge_conserved_klein_zone(self):
        grid = make_grid("kg", n=2048, v_max=3.4)
        prop = build_propagator("kg", grid, BarrierSpec("rectangular", 3.4, 20.0), PS)
        state = gaussian_state(grid, "kg", InitialGaussian(-30.0, 1.1, 6.0))
        snaps = evolve(state, prop, snapshot_times=[30.0])
        assert snaps[0].metadata["total_charge"] == pytest.approx(1.0, abs=1e-8)

    def test_instability_detected(self):
        grid = make_grid("dirac", n=256)
        prop = build_propagator("dirac", grid, FREE, PS)
        state = gaussian_state(grid, "dirac")
        prop.operator.diag_upper = prop.operator.diag_upper + 5.0  # growth factor e^5 per step
        with pytest.raises(InstabilityError):
            evolve(state, prop, steps=20, check_every=5)

    def test_nan_detected(self):
        grid = make_grid("kg", n=256)
        prop = build_propagator("kg", grid, FREE, PS)
        state = gaussian_state(grid, "kg")
        state.phi[10] = np.nan
        with pytest.raises(InstabilityError):
            evolve(state, prop, steps=3, check_every=1)

    def test_grid_mismatch(self):
        grid = make_grid("kg", n=256)
        prop = build_propagator("kg", grid, FREE, PS)
        other = gaussian_state(make_grid("kg", n=300), "kg")
        with pytest.raises(GridMismatchError):
            evolve(other, prop, steps=1)
        with pytest.raises(ConfigError):
            evolve(gaussian_state(grid, "dirac"), prop, steps=1)

    def test_snapshot_beyond_end(self):
        grid = make_grid("kg", n=256)
        prop = build_propagator("kg", grid, FREE, PS)
        with pytest.raises(ValueError):
            evolve(gaussian_state(grid, "kg"), prop, steps=2, snapshot_times=[10.0])


@settings(max_examples=20, deadline=None)
@given(st.floats(-2.0, 5.0), st.integers(0, 2**31 - 1))
def test_dirac_norm_invariant(V, seed):
    grid = make_grid("dirac", length=40.0, n=256, v_max=abs(V))
    prop = build_propagator("dirac", grid, BarrierSpec("rectangular", V, 8.0), PS, adapt=False)
    rng = np.random.default_rng(seed)
    x = grid.x
    env = np.exp(-(x / 6.0) ** 2)
    phi = env * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    chi = env * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    f0 = SpinorField(x, phi, chi, 0.0, "dirac")
    f1 = prop.apply(f0, 3)
    q0 = np.sum(charge_density(f0))
    assert np.sum(charge_density(f1)) == pytest.approx(q0, rel=1e-9)
