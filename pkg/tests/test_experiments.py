import dataclasses

import numpy as np
import pytest

from handset_emf import engine, physics
from handset_emf.calibration import (calibrate_table1, calibration_for, case_factors,
                                     solve_exposed_mass)
from handset_emf.config import default_config, parse_config
from handset_emf.errors import CalibrationError, ConfigError, SimulationError
from handset_emf.experiments import EXPERIMENTS, reduction_summary, run_experiment
from handset_emf.scenario import ScenarioId

CFG = default_config()
CAL = calibration_for(CFG)
ORDER = list(ScenarioId)


def _by_scenario(ds, col):
    return {s: ds[col][ds['scenario'] == s.value] for s in ScenarioId}


# -- calibration ------------------------------------------------------------

def test_mass_inversion():
    assert solve_exposed_mass(5.5, 2.75) == pytest.approx(2.0)
    with pytest.raises(CalibrationError):
        solve_exposed_mass(0.0, 2.75)
    with pytest.raises(CalibrationError):
        solve_exposed_mass(1.0, 0.0)


def test_equal_powers_case_factor():
    targets = dict(zip([s.value for s in ORDER], (2.75, 1.71, 1.5, 0.8)))
    f = case_factors({k: 1.0 for k in targets}, targets)
    assert f['CASE1_OFFLOAD'] == pytest.approx(1.71 / 2.75)
    assert f['CASE1_OFFLOAD'] == pytest.approx(0.622, abs=5e-4)
    assert f['BASELINE_8'] == 1.0
    with pytest.raises(CalibrationError):
        case_factors(dict(targets, CASE2_SECTIONED=0.0), targets)


def test_calibration_reproduces_surface_targets():
    for s, target in zip(ORDER, (2.75, 1.71, 1.5, 0.8)):
        p = physics.scenario_powers(CFG, s)
        assert engine.sar_depth(CFG, p, CAL).values[0] == pytest.approx(target, abs=1e-12)
    for s, target in zip(ORDER, (0.8, 0.4, 0.31, 0.13)):
        p = physics.scenario_powers(CFG, s)
        assert engine.er_at_reference(CFG, p, CAL) == pytest.approx(target, abs=1e-12)


def test_calibration_mode_none_uses_config_constants():
    cfg = parse_config('[simulation]\ncalibration = none\n')
    cal = calibration_for(cfg)
    assert cal.exposed_mass_kg == cfg.tissue.exposed_mass_kg
    assert set(cal.sar_factors.values()) == {1.0}


def test_calibration_errors_on_zero_power():
    cfg = parse_config('[layout]\nper_antenna_power_w = 0\n')
    with pytest.raises(CalibrationError):
        calibrate_table1(cfg)


# -- physics ------------------------------------------------------------------

def test_ledgers_per_scenario():
    sizes = {s: len(physics.scenario_powers(CFG, s).ledger) for s in ScenarioId}
    assert sizes[ScenarioId.BASELINE_8] == 7
    assert sizes[ScenarioId.CASE2_SECTIONED] == 1
    assert sizes[ScenarioId.CASE3_COMBINED] == 1


def test_case1_ul_component_half():
    b = physics.scenario_powers(CFG, ScenarioId.BASELINE_8)
    c = physics.scenario_powers(CFG, ScenarioId.CASE1_OFFLOAD)
    assert c.ul_share_w == pytest.approx(0.5 * b.ul_share_w)


def test_channel_dims():
    dims = {s: physics.channel_dims(physics.scenario_powers(CFG, s)) for s in ScenarioId}
    assert dims[ScenarioId.BASELINE_8] == (4, 4)
    assert dims[ScenarioId.CASE1_OFFLOAD] == (4, 2)


def test_shared_channels_are_nested_blocks():
    cfg = dataclasses.replace(CFG, channel=dataclasses.replace(CFG.channel, capacity_seeds=3))
    ch = physics.shared_channels(cfg, [(4, 4), (4, 2), (1, 1)])
    for a, b, c in zip(ch[(4, 4)], ch[(4, 2)], ch[(1, 1)]):
        np.testing.assert_array_equal(a.entries[:, :2], b.entries)
        assert c.entries[0, 0] == a.entries[0, 0]


# -- experiments ------------------------------------------------------------

def test_unknown_experiment_lists_names():
    with pytest.raises(ConfigError) as exc:
        run_experiment('fig99', CFG, CAL)
    for name in EXPERIMENTS:
        assert name in str(exc.value)


@pytest.mark.parametrize('name', list(EXPERIMENTS))
def test_every_dataset_is_labelled(name):
    bundle = run_experiment(name, CFG, CAL)
    assert bundle.datasets
    for ds in bundle.datasets:
        assert ds.experiment == name
        assert ds.axes and all(a in ds.units for a in ds.axes)
        assert ds.rows > 0
    m = bundle.manifest
    for key in ('config_sha256', 'seed', 'versions', 'calibration', 'config', 'model_notes'):
        assert key in m
    assert m['config_sha256'] == CFG.digest()
    assert parse_config(m['config']) == CFG


def test_capacity_ordering():
    ds = run_experiment('capacity_vs_freq', CFG, CAL)['capacity_vs_freq']
    by = {e: ds['capacity'][ds['scenario'] == s] for s, e in
          (('BASELINE_8', 8), ('CASE1_OFFLOAD', 6), ('REF_2EL', 2))}
    assert by[8].size == 11
    assert np.all(by[8] > by[6]) and np.all(by[6] > by[2])


def test_sar_vs_depth_surface_and_decay():
    b = run_experiment('sar_vs_depth', CFG, CAL)
    sar = _by_scenario(b['sar_vs_depth'], 'sar')
    assert [sar[s][0] for s in ORDER] == pytest.approx([2.75, 1.71, 1.5, 0.8], abs=1e-12)
    for s in ORDER:
        assert np.all(np.diff(sar[s]) < 0)
    # scenario ordering at every depth
    for a, c in zip(ORDER, ORDER[1:]):
        assert np.all(sar[a] >= sar[c])
    res = b['table1_residuals']
    assert res.rows == 20
    assert np.all(res['within_factor_2'])


def test_reduction_summary_targets():
    s = reduction_summary(CFG, CAL)
    assert abs(s['sar']['reduction_percent'] - 71.0) <= 2.0
    assert abs(s['er']['reduction_percent'] - 84.0) <= 2.0
    assert abs(s['pd']['reduction_percent'] - 40.0) <= 5.0


def test_er_ordering_and_decay():
    b = run_experiment('er_3d', CFG, CAL)
    grid = b['er_3d']
    er = {}
    for s in ORDER:
        m = grid['scenario'] == s.value
        nt = np.unique(grid['time'][m]).size
        er[s] = grid['exposure_ratio'][m].reshape(nt, -1)
        assert np.all(np.diff(er[s][1:], axis=1) < 0)
    for a, c in zip(ORDER, ORDER[1:]):
        assert np.all(er[a] >= er[c])
    ref = b['er_reference']
    np.testing.assert_allclose(ref['exposure_ratio'], [0.8, 0.4, 0.31, 0.13], atol=0.01)
    assert list(ref['time']) == [40.0] * 4 and list(ref['depth']) == [10.0] * 4


def test_directivity_dataset_ordering():
    ds = run_experiment('directivity_vs_freq', CFG, CAL)['directivity_vs_freq']
    for f in CFG.band.directivity_frequencies_ghz:
        m = ds['frequency'] == f
        d = dict(zip(ds['elements'][m], ds['directivity'][m]))
        assert d[8] > d[6] > d[2]


def test_pd_far_scales_with_emitted_power():
    ds = run_experiment('pd_vs_freq', CFG, CAL)['pd_vs_freq']
    pd = _by_scenario(ds, 'power_density')
    ratio = pd[ScenarioId.CASE3_COMBINED] / pd[ScenarioId.BASELINE_8]
    assert np.allclose(ratio, ratio[0])
    assert 0.55 <= ratio[0] <= 0.65


def test_energy_report_claims():
    ds = run_experiment('energy_report', CFG, CAL)['energy_report']
    ul = dict(zip(ds['scenario'], ds['ul_energy']))
    tot = dict(zip(ds['scenario'], ds['total_energy']))
    assert ul['CASE1_OFFLOAD'] == 0.5 * ul['BASELINE_8']
    assert all(tot[s] < tot['BASELINE_8'] for s in tot if s != 'BASELINE_8')


def test_state_machine_replay_dataset():
    ds = run_experiment('state_machine_replay', CFG, CAL)['state_machine_replay']
    assert np.all(ds['active_ul'] >= 2)
    assert list(ds['offloaded_tx']) == [0, 0, 2, 2, 0, 2, 0, 0]


def test_scenario_filter():
    cfg = parse_config('[simulation]\nscenario = CASE2_SECTIONED\n')
    ds = run_experiment('pd_vs_depth', cfg)['pd_vs_depth']
    assert set(ds['scenario']) == {'CASE2_SECTIONED'}


# -- run_scenario -------------------------------------------------------------

def test_run_scenario_composes_everything():
    r = engine.run_scenario(ScenarioId.BASELINE_8, CFG, CAL)
    assert r.sar.values[0] == pytest.approx(2.75)
    assert r.capacity_bps.shape == (11,)
    assert r.temperature.steady.values.max() > 0
    assert r.energy.total_j > 0
    assert parse_config(r.config_text) == CFG


def test_run_scenario_deterministic():
    a = engine.run_scenario(ScenarioId.CASE3_COMBINED, CFG, CAL)
    b = engine.run_scenario(ScenarioId.CASE3_COMBINED, CFG, CAL)
    np.testing.assert_array_equal(a.capacity_bps, b.capacity_bps)
    np.testing.assert_array_equal(a.er_percent, b.er_percent)
    np.testing.assert_array_equal(a.temperature.transient, b.temperature.transient)


def test_run_scenario_pd_reduction():
    base = engine.run_scenario(ScenarioId.BASELINE_8, CFG, CAL)
    c3 = engine.run_scenario(ScenarioId.CASE3_COMBINED, CFG, CAL)
    red = 100 * (1 - c3.pd_far_w_m2 / base.pd_far_w_m2)
    assert np.all(np.abs(red - 40.0) <= 5.0)


def test_run_scenario_error_context():
    cfg = parse_config('[layout]\ncase1_offload = 2, 4\n')
    with pytest.raises(SimulationError, match='CASE1_OFFLOAD'):
        engine.run_scenario(ScenarioId.CASE1_OFFLOAD, cfg)
