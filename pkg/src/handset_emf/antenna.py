"""Handset antenna array layouts, adjacency interference and directivity."""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Mapping, NamedTuple, Tuple

import numpy as np

from .errors import LayoutError, ParameterError

SPEED_OF_LIGHT = 299792458.0

Pair = Tuple[int, int]


class Role(str, Enum):
    UL = 'UL'
    DL = 'DL'
    WIFI = 'WIFI'


@dataclass(frozen=True)
class Substrate:
    thickness_mm: float = 0.8
    dielectric_constant: float = 2.8
    loss_tangent: float = 0.002


@dataclass(frozen=True)
class AntennaElement:
    """One radiating element. ``index`` is its 1-based position in the array."""
    index: int
    role: Role
    active: bool = True
    power: float = 0.25
    gain: float = 1.0

    def __post_init__(self):
        if self.power < 0:
            raise ParameterError(f"element {self.index}: power must be >= 0")
        if not self.gain > 0:
            raise ParameterError(f"element {self.index}: gain must be > 0")
        object.__setattr__(self, 'role', Role(self.role))

    @property
    def active_power(self) -> float:
        return self.power if self.active else 0.0


@dataclass(frozen=True)
class ArrayLayout:
    """Ordered elements; element k is adjacent to element k + 1."""
    elements: Tuple[AntennaElement, ...]
    substrate: Substrate = Substrate()
    frame_dims_mm: Tuple[float, float] = (3.9, 17.0)

    def __post_init__(self):
        object.__setattr__(self, 'elements', tuple(self.elements))
        for pos, e in enumerate(self.elements, start=1):
            if e.index != pos:
                raise LayoutError(f"element at position {pos} has index {e.index}")

    def __len__(self):
        return len(self.elements)

    def count(self, role: Role, active_only: bool = True) -> int:
        return sum(1 for e in self.elements
                   if e.role == role and (e.active or not active_only))

    @property
    def roles(self) -> Tuple[Role, ...]:
        return tuple(e.role for e in self.elements)

    def reversed(self) -> 'ArrayLayout':
        return replace(self, elements=tuple(
            replace(e, index=i + 1) for i, e in enumerate(reversed(self.elements))))

    def with_roles(self, roles: Iterable[Role]) -> 'ArrayLayout':
        roles = list(roles)
        if len(roles) != len(self.elements):
            raise LayoutError("role list length does not match element count")
        return replace(self, elements=tuple(
            replace(e, role=Role(r)) for e, r in zip(self.elements, roles)))

    def deactivate(self, indices: Iterable[int]) -> 'ArrayLayout':
        off = set(indices)
        unknown = off - {e.index for e in self.elements}
        if unknown:
            raise LayoutError(f"no elements with indices {sorted(unknown)}")
        return replace(self, elements=tuple(
            replace(e, active=False) if e.index in off else e for e in self.elements))


def make_layout(roles: Iterable, power: float = 0.25, gain: float = 1.0,
                substrate: Substrate = Substrate()) -> ArrayLayout:
    return ArrayLayout(tuple(AntennaElement(i, Role(r), True, power, gain)
                             for i, r in enumerate(roles, start=1)), substrate)


def alternating_layout(n: int = 8, power: float = 0.25, gain: float = 1.0) -> ArrayLayout:
    """Conventional UL, DL, UL, DL, ... layout."""
    return make_layout([Role.UL if i % 2 == 0 else Role.DL for i in range(n)], power, gain)


def sectioned_layout(n: int = 8, power: float = 0.25, gain: float = 1.0) -> ArrayLayout:
    """All UL elements in one block followed by all DL elements."""
    return make_layout([Role.UL] * (n // 2) + [Role.DL] * (n - n // 2), power, gain)


def qualifying_pairs(layout: ArrayLayout) -> List[Pair]:
    """Adjacent (k, k + 1) pairs with one UL and one DL element, both active."""
    pairs = []
    for a, b in zip(layout.elements, layout.elements[1:]):
        if a.active and b.active and {a.role, b.role} == {Role.UL, Role.DL}:
            pairs.append((a.index, b.index))
    return pairs


def default_coefficients(layout: ArrayLayout, fraction: float = 0.05,
                         overrides: Mapping[Pair, float] = None) -> Dict[Pair, float]:
    """Coupling power for every adjacent pair: ``fraction`` of the smaller
    neighbour power, replaced by ``overrides`` where given."""
    if fraction < 0:
        raise ParameterError(f"interference fraction must be >= 0, got {fraction}")
    coeffs = {(a.index, b.index): fraction * min(a.power, b.power)
              for a, b in zip(layout.elements, layout.elements[1:])}
    for pair, value in (overrides or {}).items():
        if tuple(pair) not in coeffs:
            raise LayoutError(f"override for non-adjacent pair {pair}")
        coeffs[tuple(pair)] = float(value)
    return coeffs


def interference_ledger(layout: ArrayLayout, coeffs: Mapping[Pair, float]) -> Dict[Pair, float]:
    """Terms actually incurred by ``layout``: one per qualifying pair."""
    negative = {p: v for p, v in coeffs.items() if v < 0}
    if negative:
        raise ParameterError(f"negative interference coefficients: {negative}")
    ledger = {}
    for pair in qualifying_pairs(layout):
        if pair not in coeffs:
            raise ParameterError(f"no interference coefficient for pair {pair}")
        ledger[pair] = float(coeffs[pair])
    return ledger


def interference_total(layout: ArrayLayout, coeffs: Mapping[Pair, float]) -> float:
    return float(sum(interference_ledger(layout, coeffs).values()))


def radiated_power(layout: ArrayLayout, coeffs: Mapping[Pair, float], alpha: float) -> float:
    """UL radiated power: sum of ``alpha * P_i`` over active UL elements plus
    the interference total."""
    _check_alpha(alpha)
    ul = sum(alpha * e.power for e in layout.elements if e.active and e.role == Role.UL)
    return ul + interference_total(layout, coeffs)


def total_emitted_power(layout: ArrayLayout, coeffs: Mapping[Pair, float], alpha: float) -> float:
    """UL share of every active UL element, DL share ``(1 - alpha) * P_i`` of
    every active DL element, plus the interference total."""
    _check_alpha(alpha)
    dl = sum((1.0 - alpha) * e.power for e in layout.elements
             if e.active and e.role == Role.DL)
    return radiated_power(layout, coeffs, alpha) + dl


def _check_alpha(alpha):
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"split ratio alpha must lie in [0, 1], got {alpha}")


class Directivity(NamedTuple):
    value: float
    dbi: float


def to_dbi(d: float) -> float:
    return 10.0 * math.log10(d)


def directivity(intensity: float, radiated: float) -> Directivity:
    """D = U * 4 pi / P_rad for intensity U (W/sr) in the chosen direction."""
    if not radiated > 0:
        raise ParameterError(f"radiated power must be > 0, got {radiated}")
    if intensity < 0:
        raise ParameterError(f"radiation intensity must be >= 0, got {intensity}")
    d = intensity * 4.0 * math.pi / radiated
    return Directivity(d, to_dbi(d) if d > 0 else -math.inf)


def directivity_total(intensity: float, powers: Iterable[float]) -> Directivity:
    """Sum of the per-antenna directivities U * 4 pi / P_i of the transmitting
    antennas (the 4x2 total)."""
    powers = list(powers)
    if not powers or any(p <= 0 for p in powers):
        raise ParameterError("every transmit power must be > 0")
    if intensity < 0:
        raise ParameterError(f"radiation intensity must be >= 0, got {intensity}")
    d = intensity * 4.0 * math.pi * sum(1.0 / p for p in powers)
    return Directivity(d, to_dbi(d) if d > 0 else -math.inf)


def intensity_from_density(density: float, distance: float) -> float:
    """Radiation intensity U = W r^2 (W/sr) from power density W at range r."""
    if not distance > 0:
        raise ParameterError(f"distance must be > 0, got {distance}")
    if density < 0:
        raise ParameterError(f"power density must be >= 0, got {density}")
    return density * distance ** 2


def array_factor_power(n: int, kd: float, cos_theta: np.ndarray) -> np.ndarray:
    """|AF|^2 of a uniformly excited n-element line array along z, broadside."""
    m = np.arange(n)
    af = np.exp(1j * kd * np.outer(np.atleast_1d(cos_theta), m)).sum(axis=1)
    return np.abs(af) ** 2


def array_directivity(n: int, frequency_hz: float, pitch_mm: float = 3.5,
                      element_gain: float = 1.0, nodes: int = 256) -> Directivity:
    """Boresight directivity of an n-element uniform line array.

    The element pitch is fixed in millimetres, so the electrical spacing
    grows with frequency. The array-factor directivity is obtained by
    integrating |AF|^2 over the sphere (Gauss-Legendre in cos(theta)) and
    then scaled by the element gain.
    """
    if n < 1:
        raise ParameterError(f"element count must be >= 1, got {n}")
    if not (frequency_hz > 0 and pitch_mm > 0 and element_gain > 0):
        raise ParameterError("frequency, pitch and element gain must be > 0")
    kd = 2.0 * math.pi * frequency_hz / SPEED_OF_LIGHT * pitch_mm * 1e-3
    u, w = np.polynomial.legendre.leggauss(nodes)
    p_rad = 2.0 * math.pi * float(np.sum(w * array_factor_power(n, kd, u)))
    peak = float(array_factor_power(n, kd, np.array([0.0]))[0])
    d = directivity(peak, p_rad).value * element_gain
    return Directivity(d, to_dbi(d))
