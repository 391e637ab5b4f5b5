import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from handset_emf import antenna
from handset_emf.antenna import AntennaElement, ArrayLayout, Role, Substrate
from handset_emf.errors import LayoutError, ParameterError
from handset_emf.exposure import power_density_far

UL, DL, WIFI = Role.UL, Role.DL, Role.WIFI


def _uniform(layout, value):
    return {(a.index, b.index): value for a, b in zip(layout.elements, layout.elements[1:])}


def test_defaults():
    lay = antenna.alternating_layout()
    assert lay.substrate == Substrate(0.8, 2.8, 0.002)
    assert lay.frame_dims_mm == (3.9, 17.0)
    assert lay.roles == (UL, DL) * 4


def test_element_validation():
    with pytest.raises(ParameterError):
        AntennaElement(1, UL, True, power=-1.0)
    with pytest.raises(ParameterError):
        AntennaElement(1, UL, True, gain=0.0)
    assert AntennaElement(1, UL, False, power=2.0).active_power == 0.0


def test_interference_zero_coeffs():
    lay = antenna.alternating_layout()
    assert antenna.interference_total(lay, _uniform(lay, 0.0)) == 0.0


def test_alternating_seven_terms():
    lay = antenna.alternating_layout()
    assert antenna.interference_total(lay, _uniform(lay, 0.1)) == pytest.approx(0.7)
    assert antenna.qualifying_pairs(lay) == [(k, k + 1) for k in range(1, 8)]


def test_sectioned_single_junction():
    lay = antenna.sectioned_layout()
    ledger = antenna.interference_ledger(lay, _uniform(lay, 0.1))
    assert ledger == {(4, 5): pytest.approx(0.1)}


def test_negative_coefficient_rejected():
    lay = antenna.alternating_layout()
    c = _uniform(lay, 0.1)
    c[(3, 4)] = -0.01
    with pytest.raises(ParameterError):
        antenna.interference_total(lay, c)


def test_missing_coefficient_rejected():
    lay = antenna.alternating_layout()
    c = _uniform(lay, 0.1)
    del c[(2, 3)]
    with pytest.raises(ParameterError):
        antenna.interference_total(lay, c)


def test_default_coefficients_and_overrides():
    lay = antenna.alternating_layout(power=0.25)
    c = antenna.default_coefficients(lay, 0.05, {(4, 5): 0.3})
    assert c[(1, 2)] == pytest.approx(0.0125)
    assert c[(4, 5)] == 0.3
    with pytest.raises(LayoutError):
        antenna.default_coefficients(lay, 0.05, {(1, 3): 0.1})
    with pytest.raises(ParameterError):
        antenna.default_coefficients(lay, -0.1)


def test_wifi_carries_no_terms():
    lay = antenna.make_layout([UL, WIFI, DL, UL, WIFI])
    assert antenna.qualifying_pairs(lay) == [(3, 4)]


def _oracle_pairs(roles, active):
    """Brute force over every index pair: adjacent, opposite cellular roles, both active."""
    n = len(roles)
    out = []
    for i, j in itertools.combinations(range(n), 2):
        if j - i == 1 and active[i] and active[j] and sorted([roles[i].value, roles[j].value]) == ['DL', 'UL']:
            out.append((i + 1, j + 1))
    return out


def test_ledger_matches_oracle_for_every_role_arrangement():
    arrangements = set(itertools.permutations([UL] * 4 + [DL] * 4))
    assert len(arrangements) == 70
    for roles in arrangements:
        lay = antenna.make_layout(roles)
        assert antenna.qualifying_pairs(lay) == _oracle_pairs(roles, [True] * 8)
        total = antenna.interference_total(lay, _uniform(lay, 0.1))
        assert total == pytest.approx(0.1 * len(_oracle_pairs(roles, [True] * 8)))


@settings(max_examples=200, deadline=None)
@given(roles=st.lists(st.sampled_from([UL, DL, WIFI]), min_size=1, max_size=10),
       data=st.data())
def test_ledger_oracle_with_inactive_elements(roles, data):
    active = data.draw(st.lists(st.booleans(), min_size=len(roles), max_size=len(roles)))
    lay = antenna.make_layout(roles)
    lay = lay.deactivate([i + 1 for i, a in enumerate(active) if not a])
    assert antenna.qualifying_pairs(lay) == _oracle_pairs(roles, active)


@settings(max_examples=100, deadline=None)
@given(roles=st.lists(st.sampled_from([UL, DL, WIFI]), min_size=2, max_size=10),
       c=st.floats(0, 10))
def test_interference_reversal_symmetry(roles, c):
    lay = antenna.make_layout(roles)
    rev = lay.reversed()
    assert antenna.interference_total(lay, _uniform(lay, c)) == pytest.approx(
        antenna.interference_total(rev, _uniform(rev, c)))


@settings(max_examples=100, deadline=None)
@given(c=st.floats(1e-6, 10))
def test_sectioned_is_one_seventh(c):
    alt, sec = antenna.alternating_layout(), antenna.sectioned_layout()
    ratio = antenna.interference_total(sec, _uniform(sec, c)) / antenna.interference_total(alt, _uniform(alt, c))
    assert ratio == pytest.approx(1 / 7)


# -- radiated power ---------------------------------------------------------

def test_radiated_no_ul():
    lay = antenna.make_layout([DL] * 4)
    assert antenna.radiated_power(lay, _uniform(lay, 0.0), 0.5) == 0.0


def test_radiated_four_ul():
    lay = antenna.alternating_layout(power=1.0)
    assert antenna.radiated_power(lay, _uniform(lay, 0.0), 0.5) == pytest.approx(2.0)


def test_radiated_case3_form():
    lay = antenna.sectioned_layout(power=1.0).deactivate([1, 2])
    assert antenna.radiated_power(lay, _uniform(lay, 0.1), 0.5) == pytest.approx(1.1)


def test_radiated_alpha_checked():
    lay = antenna.alternating_layout()
    with pytest.raises(ParameterError):
        antenna.radiated_power(lay, _uniform(lay, 0.0), 1.2)


def test_total_emitted_adds_dl_share():
    lay = antenna.alternating_layout(power=1.0)
    c = _uniform(lay, 0.1)
    assert antenna.total_emitted_power(lay, c, 0.75) == pytest.approx(3.0 + 1.0 + 0.7)


@settings(max_examples=100, deadline=None)
@given(roles=st.lists(st.sampled_from([UL, DL]), min_size=2, max_size=8),
       alpha=st.floats(0, 1), frac=st.floats(0, 1), power=st.floats(0, 5), data=st.data())
def test_deactivating_ul_never_increases_radiated(roles, alpha, frac, power, data):
    lay = antenna.make_layout(roles, power=power)
    c = antenna.default_coefficients(lay, frac)
    ul = [e.index for e in lay.elements if e.role == UL]
    if not ul:
        return
    k = data.draw(st.sampled_from(ul))
    assert antenna.radiated_power(lay.deactivate([k]), c, alpha) <= antenna.radiated_power(lay, c, alpha) + 1e-12


# -- directivity --------------------------------------------------------------

def test_isotropic_directivity():
    d = antenna.directivity(10.0 / (4 * math.pi), 10.0)
    assert d.value == pytest.approx(1.0)
    assert d.dbi == pytest.approx(0.0, abs=1e-12)


def test_double_directivity():
    d = antenna.directivity(2 * 3.0 / (4 * math.pi), 3.0)
    assert d.value == pytest.approx(2.0)
    assert d.dbi == pytest.approx(3.0103, abs=1e-4)


def test_directivity_total_4x2():
    d = antenna.directivity_total(1.0, [4 * math.pi, 4 * math.pi])
    assert d.value == pytest.approx(2.0)


def test_directivity_errors():
    with pytest.raises(ParameterError):
        antenna.directivity(1.0, 0.0)
    with pytest.raises(ParameterError):
        antenna.directivity(-1.0, 1.0)
    with pytest.raises(ParameterError):
        antenna.directivity_total(1.0, [1.0, 0.0])


@settings(max_examples=100)
@given(u=st.floats(0, 1e6), p=st.floats(1e-6, 1e6), k=st.floats(1e-3, 1e3))
def test_directivity_homogeneous(u, p, k):
    assert antenna.directivity(u * k, p * k).value == pytest.approx(antenna.directivity(u, p).value)


def test_intensity_from_density():
    assert antenna.intensity_from_density(0.0, 1.0) == 0.0
    assert antenna.intensity_from_density(1.0, 2.0) == 4.0
    with pytest.raises(ParameterError):
        antenna.intensity_from_density(1.0, 0.0)


@settings(max_examples=100)
@given(g=st.floats(1e-3, 1e3), p=st.floats(1e-3, 1e3), d=st.floats(1e-3, 1e3))
def test_intensity_round_trip(g, p, d):
    u = antenna.intensity_from_density(power_density_far(g, p, d), d)
    assert u == pytest.approx(g * p / (4 * math.pi))


def _ula_closed_form(n, kd):
    m = np.arange(1, n)
    return n ** 2 / (n + 2 * np.sum((n - m) * np.sinc(m * kd / np.pi)))


@pytest.mark.parametrize('n', [1, 2, 4, 6, 8])
@pytest.mark.parametrize('f_ghz', [3.5, 28.0, 54.0])
def test_array_directivity_closed_form(n, f_ghz):
    kd = 2 * math.pi * f_ghz * 1e9 / 299_792_458.0 * 3.5e-3
    d = antenna.array_directivity(n, f_ghz * 1e9, 3.5, 1.0)
    assert d.value == pytest.approx(_ula_closed_form(n, kd), rel=1e-9)


@pytest.mark.parametrize('f_ghz', [3.5, 28.0, 54.0])
def test_directivity_ordering_by_size(f_ghz):
    gain = 10 ** 0.2
    d = {n: antenna.array_directivity(n, f_ghz * 1e9, 3.5, gain).value for n in (2, 6, 8)}
    assert d[8] > d[6] > d[2]


def test_directivity_increases_with_frequency():
    for n in (2, 6, 8):
        vals = [antenna.array_directivity(n, f * 1e9).value for f in (3.5, 28.0, 54.0)]
        assert vals[0] < vals[1] < vals[2]


def test_array_directivity_errors():
    with pytest.raises(ParameterError):
        antenna.array_directivity(0, 1e9)
    with pytest.raises(ParameterError):
        antenna.array_directivity(2, -1e9)


def test_layout_helpers():
    lay = antenna.alternating_layout()
    assert lay.count(UL) == 4 and lay.count(DL) == 4
    off = lay.deactivate([1, 3])
    assert off.count(UL) == 2 and off.count(UL, active_only=False) == 4
    with pytest.raises(LayoutError):
        lay.deactivate([9])
    assert lay.with_roles([UL] * 4 + [DL] * 4).roles == antenna.sectioned_layout().roles
    assert isinstance(lay, ArrayLayout)
