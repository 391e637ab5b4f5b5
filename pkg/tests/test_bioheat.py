import numpy as np
import pytest

from handset_emf import engine, exposure, physics
from handset_emf.bioheat import bioheat_solve, heat_balance
from handset_emf.calibration import calibration_for
from handset_emf.config import default_config
from handset_emf.errors import ParameterError, StabilityError
from handset_emf.exposure import DepthProfile, TissueLayer, TissueStack
from handset_emf.scenario import ScenarioId

RHO, K = 1100.0, 0.5


def _slab(perfusion=0.0, thickness=10.0):
    return TissueStack((TissueLayer('slab', thickness, 1.0, 40.0, RHO, 3500.0, perfusion, K),))


def _uniform_sar(value, length_mm=5.0, n=200):
    z = np.linspace(0.0, length_mm, n)
    return DepthProfile(z, np.full(n, value), 'W/kg')


def parabola(z_mm, s0, length_mm):
    z, L = z_mm * 1e-3, length_mm * 1e-3
    return RHO * s0 * z * (L - z) / (2 * K)


def test_zero_sar_gives_zero_rise():
    res = bioheat_solve(_slab(0.002), _uniform_sar(0.0), 30.0)
    assert np.all(res.transient == 0.0)
    assert np.all(res.steady.values == 0.0)


def test_steady_matches_parabola():
    sar = _uniform_sar(10.0)
    res = bioheat_solve(_slab(), sar, 1.0, surface_bc='dirichlet')
    exact = parabola(sar.z_mm, 10.0, 5.0)
    err = np.max(np.abs(res.steady.values - exact)) / np.max(exact)
    assert err < 0.01
    assert err < 1e-9  # the scheme is exact for quadratics


def test_transient_converges_monotonically():
    sar = _uniform_sar(10.0, 2.0, 41)
    times = np.linspace(0.0, 40.0, 21)
    res = bioheat_solve(_slab(), sar, 40.0, sample_times_s=times, surface_bc='dirichlet')
    gap = np.max(np.abs(res.transient - res.steady.values), axis=1)
    assert np.all(np.diff(gap) < 0)
    assert np.all(np.diff(res.transient, axis=0) >= -1e-15)
    assert np.all(res.transient <= res.steady.values + 1e-12)
    assert gap[-1] / gap[0] < 1e-3


def test_rise_is_non_negative_for_convective_surface():
    sar = exposure.sar_profile(1.0, exposure.read_tissue_file('builtin:skin_28GHz.txt'), 28e9,
                               exposure.depth_grid(10.0, 0.05))
    res = bioheat_solve(exposure.read_tissue_file('builtin:skin_28GHz.txt'), sar, 40.0)
    assert np.all(res.transient >= 0.0)
    assert np.all(res.steady.values >= 0.0)
    assert res.steady.values[0] > 0.0


def test_perfusion_lowers_peak():
    sar = _uniform_sar(10.0, 10.0, 101)
    cold = bioheat_solve(_slab(0.0), sar, 1.0, surface_bc='dirichlet')
    warm = bioheat_solve(_slab(0.005), sar, 1.0, surface_bc='dirichlet')
    assert warm.steady.values.max() < cold.steady.values.max()


def test_explicit_step_above_bound_refused():
    sar = _uniform_sar(1.0)
    res = bioheat_solve(_slab(), sar, 1.0)
    with pytest.raises(StabilityError):
        bioheat_solve(_slab(), sar, 1.0, dt_s=res.dt_s * 10)
    bioheat_solve(_slab(), sar, 1.0, dt_s=res.dt_s / 2)


def test_solver_input_errors():
    with pytest.raises(ParameterError):
        bioheat_solve(_slab(), _uniform_sar(1.0), 0.0)
    with pytest.raises(ParameterError):
        bioheat_solve(_slab(), _uniform_sar(1.0), 1.0, surface_bc='adiabatic')
    bad = DepthProfile(np.array([0.0, 0.1, 0.3, 0.4]), np.ones(4))
    with pytest.raises(ParameterError):
        bioheat_solve(_slab(), bad, 1.0)
    with pytest.raises(ParameterError):
        bioheat_solve(_slab(), _uniform_sar(1.0), 1.0, sample_times_s=[0.0, 2.0])


@pytest.mark.parametrize('bc', ['convective', 'dirichlet'])
def test_heat_balance_default_grid(bc):
    tissue = exposure.read_tissue_file('builtin:skin_28GHz.txt')
    sar = exposure.sar_profile(2.0, tissue, 28e9, exposure.depth_grid(10.0, 0.05))
    res = bioheat_solve(tissue, sar, 1.0, surface_bc=bc)
    assert heat_balance(res, sar, tissue)['relative_error'] < 0.02


def test_engine_thermal_for_calibrated_baseline():
    cfg = default_config()
    cal = calibration_for(cfg)
    p = physics.scenario_powers(cfg, ScenarioId.BASELINE_8)
    res = engine.thermal(cfg, p, cal)
    sar = engine.sar_depth(cfg, p, cal, physics.thermal_grid(cfg))
    tissue = physics.sar_tissue(cfg, cal.exposed_mass_kg)
    assert res.z_mm.size == 201
    assert heat_balance(res, sar, tissue)['relative_error'] < 0.02
    assert np.all(res.transient[-1] <= res.steady.values + 1e-12)
