"""Simulation configuration: INI-style sections of flat key = value pairs.

Every field has an explicit default; :func:`load_config` returns a fully
populated :class:`SimulationConfig` and :func:`dump_config` writes all of it
back out, so a dumped config reproduces a run without hidden defaults.
"""

import configparser
import hashlib
import io
import logging
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Dict, Tuple, Union, get_type_hints

from .errors import ConfigError
from .scenario import ScenarioId

log = logging.getLogger(__name__)

BAND_LIMITS_GHZ = {'sub6': (0.54, 6.0), 'mmwave': (24.0, 52.0)}
DEFAULT_FREQUENCIES_GHZ = {
    'sub6': tuple(1.0 + 0.5 * i for i in range(11)),
    'mmwave': (24.0, 28.0, 39.0, 52.0),
}
OUTPUT_FORMATS = ('csv', 'json')
CALIBRATION_MODES = ('table1', 'none')


@dataclass(frozen=True)
class SimulationSection:
    seed: int = 0
    scenario: str = 'ALL'
    output_format: str = 'csv'
    calibration: str = 'table1'


@dataclass(frozen=True)
class BandSection:
    name: str = 'sub6'
    frequencies_ghz: Tuple[float, ...] = ()
    directivity_frequencies_ghz: Tuple[float, ...] = (3.5, 28.0, 54.0)


@dataclass(frozen=True)
class LayoutSection:
    per_antenna_power_w: float = 0.25
    split_alpha: float = 0.75
    element_gain_dbi: float = 2.0
    element_pitch_mm: float = 3.5
    substrate_thickness_mm: float = 0.8
    substrate_dielectric_constant: float = 2.8
    substrate_loss_tangent: float = 0.002
    frame_width_mm: float = 3.9
    frame_length_mm: float = 17.0
    case1_offload: Tuple[int, ...] = ()
    case3_offload: Tuple[int, ...] = ()


@dataclass(frozen=True)
class InterferenceSection:
    default_fraction: float = 0.05
    # "i-j:watts" entries separated by commas
    pair_overrides: str = ''


@dataclass(frozen=True)
class ChannelSection:
    model: str = 'iid-rayleigh'
    capacity_seeds: int = 200
    snr_ref_db: float = 30.0
    snr_ref_frequency_ghz: float = 1.0
    fractional_bandwidth: float = 0.02


@dataclass(frozen=True)
class TissueSection:
    er_tissue_file: str = 'builtin:skin_3.5GHz.txt'
    er_frequency_ghz: float = 3.5
    sar_tissue_file: str = 'builtin:skin_28GHz.txt'
    sar_frequency_ghz: float = 28.0
    exposed_mass_kg: float = 0.010
    coupling_fraction: float = 1.0


@dataclass(frozen=True)
class ExposureSection:
    location_factor: float = 1.0
    pd_total_w_m2: float = 100.0
    duration_s: float = 40.0
    ramp_tau_s: float = 10.0
    time_step_s: float = 1.0
    far_field_distance_m: float = 1.0
    near_field_distance_m: float = 0.05
    er_reference_depth_mm: float = 10.0


@dataclass(frozen=True)
class DepthSection:
    table1_max_mm: float = 1.0
    table1_step_mm: float = 0.05
    er_max_mm: float = 10.0
    er_step_mm: float = 0.25
    thermal_max_mm: float = 10.0
    thermal_step_mm: float = 0.05


@dataclass(frozen=True)
class ThermalSection:
    ambient_k: float = 310.15
    surface_bc: str = 'convective'
    surface_h_w_m2k: float = 10.0
    blood_density_kg_m3: float = 1050.0
    blood_specific_heat_j_kgk: float = 3617.0
    sample_interval_s: float = 10.0


@dataclass(frozen=True)
class CalibrationSection:
    sar_targets_w_kg: Tuple[float, ...] = (2.75, 1.71, 1.5, 0.8)
    er_targets_percent: Tuple[float, ...] = (0.8, 0.4, 0.31, 0.13)
    reference_directivity_dbi: float = 17.3


@dataclass(frozen=True)
class EnergySection:
    duration_s: float = 100.0
    hysteresis_db: float = 0.0
    trace_file: str = 'builtin'


@dataclass(frozen=True)
class SimulationConfig:
    simulation: SimulationSection = SimulationSection()
    band: BandSection = BandSection()
    layout: LayoutSection = LayoutSection()
    interference: InterferenceSection = InterferenceSection()
    channel: ChannelSection = ChannelSection()
    tissue: TissueSection = TissueSection()
    exposure: ExposureSection = ExposureSection()
    depth: DepthSection = DepthSection()
    thermal: ThermalSection = ThermalSection()
    calibration: CalibrationSection = CalibrationSection()
    energy: EnergySection = EnergySection()
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def with_seed(self, seed: int) -> 'SimulationConfig':
        return replace(self, simulation=replace(self.simulation, seed=int(seed)))

    @property
    def scenarios(self) -> Tuple[ScenarioId, ...]:
        if self.simulation.scenario == 'ALL':
            return tuple(ScenarioId)
        return (ScenarioId(self.simulation.scenario),)

    def interference_overrides(self) -> Dict[Tuple[int, int], float]:
        return parse_pair_overrides(self.interference.pair_overrides)

    def digest(self) -> str:
        return hashlib.sha256(dump_config(self).encode()).hexdigest()


SECTIONS = [f.name for f in fields(SimulationConfig) if f.name != 'warnings']


def parse_pair_overrides(text: str) -> Dict[Tuple[int, int], float]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(','))):
        try:
            pair, value = item.split(':')
            a, b = (int(x) for x in pair.split('-'))
            out[(a, b)] = float(value)
        except ValueError:
            raise ConfigError(f"interference.pair_overrides: bad entry {item!r} "
                              "(expected 'i-j:watts')") from None
        if b != a + 1:
            raise ConfigError(f"interference.pair_overrides: {a}-{b} is not an adjacent pair")
        if out[(a, b)] < 0:
            raise ConfigError(f"interference.pair_overrides: {a}-{b} must be >= 0")
    return out


def _convert(section: str, key: str, raw: str, typ):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw.strip()
        inner = typ.__args__[0]
        return tuple(inner(x) for x in (s.strip() for s in raw.split(',')) if x)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from None


def _format(value) -> str:
    if isinstance(value, tuple):
        return ', '.join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _require(cond: bool, name: str, limit: str):
    if not cond:
        raise ConfigError(f"{name} out of range: must be {limit}")


def resolve_resource(path: str) -> str:
    """Check that a referenced file exists; ``builtin:`` names packaged data."""
    if path.startswith('builtin:'):
        res = resources.files('handset_emf.data').joinpath(path[len('builtin:'):])
        if not res.is_file():
            raise ConfigError(f"no builtin data file {path!r}")
    elif not Path(path).is_file():
        raise ConfigError(f"referenced file {path!r} does not exist")
    return path


def _in_any_band(f_ghz: float) -> bool:
    return any(lo <= f_ghz <= hi for lo, hi in BAND_LIMITS_GHZ.values())


def validate(cfg: SimulationConfig) -> SimulationConfig:
    """Range-check every field, fill band defaults and collect warnings."""
    s, b, lay = cfg.simulation, cfg.band, cfg.layout
    if s.scenario != 'ALL' and s.scenario not in ScenarioId.__members__:
        raise ConfigError(f"simulation.scenario: unknown id {s.scenario!r}; valid: "
                          f"ALL, {', '.join(ScenarioId.__members__)}")
    _require(s.output_format in OUTPUT_FORMATS, 'simulation.output_format', ' | '.join(OUTPUT_FORMATS))
    _require(s.calibration in CALIBRATION_MODES, 'simulation.calibration', ' | '.join(CALIBRATION_MODES))
    if b.name not in BAND_LIMITS_GHZ:
        raise ConfigError(f"band.name: unknown band {b.name!r}; valid: sub6, mmwave")
    lo, hi = BAND_LIMITS_GHZ[b.name]
    freqs = b.frequencies_ghz or DEFAULT_FREQUENCIES_GHZ[b.name]
    for f in freqs:
        _require(lo <= f <= hi, f'band.frequencies_ghz ({f:g} GHz)',
                 f'within {lo:g} GHz - {hi:g} GHz for band {b.name}')
    warnings = []
    for f in b.directivity_frequencies_ghz:
        _require(f > 0, 'band.directivity_frequencies_ghz', '> 0')
        if not _in_any_band(f):
            warnings.append(f"directivity frequency {f:g} GHz lies outside the "
                            "0.54-6 GHz and 24-52 GHz bands")
    cfg = replace(cfg, band=replace(b, frequencies_ghz=tuple(float(f) for f in freqs)))

    _require(lay.per_antenna_power_w >= 0, 'layout.per_antenna_power_w', '>= 0')
    _require(0.0 <= lay.split_alpha <= 1.0, 'layout.split_alpha', 'within [0, 1]')
    _require(lay.element_pitch_mm > 0, 'layout.element_pitch_mm', '> 0')
    for name in ('substrate_thickness_mm', 'substrate_dielectric_constant',
                 'frame_width_mm', 'frame_length_mm'):
        _require(getattr(lay, name) > 0, f'layout.{name}', '> 0')
    _require(lay.substrate_loss_tangent >= 0, 'layout.substrate_loss_tangent', '>= 0')
    for name in ('case1_offload', 'case3_offload'):
        v = getattr(lay, name)
        _require(len(v) in (0, 2), f'layout.{name}', 'empty or two element indices')
        _require(all(1 <= i <= 8 for i in v), f'layout.{name}', 'indices within 1..8')

    _require(cfg.interference.default_fraction >= 0, 'interference.default_fraction', '>= 0')
    cfg.interference_overrides()

    ch = cfg.channel
    _require(ch.model == 'iid-rayleigh', 'channel.model', 'iid-rayleigh')
    _require(ch.capacity_seeds >= 1, 'channel.capacity_seeds', '>= 1')
    _require(ch.snr_ref_frequency_ghz > 0, 'channel.snr_ref_frequency_ghz', '> 0')
    _require(0 < ch.fractional_bandwidth <= 1, 'channel.fractional_bandwidth', 'within (0, 1]')

    t = cfg.tissue
    resolve_resource(t.er_tissue_file)
    resolve_resource(t.sar_tissue_file)
    for name in ('er_frequency_ghz', 'sar_frequency_ghz'):
        f = getattr(t, name)
        _require(_in_any_band(f), f'tissue.{name} ({f:g} GHz)',
                 'within 0.54 GHz - 6 GHz or 24 GHz - 52 GHz')
    _require(t.exposed_mass_kg > 0, 'tissue.exposed_mass_kg', '> 0')
    _require(0 < t.coupling_fraction <= 1, 'tissue.coupling_fraction', 'within (0, 1]')

    e = cfg.exposure
    for name in ('location_factor', 'pd_total_w_m2', 'duration_s', 'ramp_tau_s', 'time_step_s',
                 'far_field_distance_m', 'near_field_distance_m'):
        _require(getattr(e, name) > 0, f'exposure.{name}', '> 0')
    _require(0 <= e.er_reference_depth_mm <= cfg.depth.er_max_mm,
             'exposure.er_reference_depth_mm', f'within [0, {cfg.depth.er_max_mm:g}] mm')
    for name in (f.name for f in fields(DepthSection)):
        _require(getattr(cfg.depth, name) > 0, f'depth.{name}', '> 0')

    th = cfg.thermal
    _require(th.surface_bc in ('convective', 'dirichlet'), 'thermal.surface_bc', 'convective | dirichlet')
    for name in ('ambient_k', 'blood_density_kg_m3', 'blood_specific_heat_j_kgk', 'sample_interval_s'):
        _require(getattr(th, name) > 0, f'thermal.{name}', '> 0')
    _require(th.surface_h_w_m2k >= 0, 'thermal.surface_h_w_m2k', '>= 0')

    c = cfg.calibration
    for name in ('sar_targets_w_kg', 'er_targets_percent'):
        v = getattr(c, name)
        _require(len(v) == 4, f'calibration.{name}', 'four values (baseline, case 1, case 2, case 3)')
        _require(all(x > 0 for x in v), f'calibration.{name}', '> 0')

    _require(cfg.energy.duration_s > 0, 'energy.duration_s', '> 0')
    _require(cfg.energy.hysteresis_db >= 0, 'energy.hysteresis_db', '>= 0')
    if cfg.energy.trace_file != 'builtin':
        resolve_resource(cfg.energy.trace_file)
    for w in warnings:
        log.warning(w)
    return replace(cfg, warnings=tuple(warnings))


def parse_config(text: str, source: str = '<string>') -> SimulationConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    unknown_sections = [s for s in parser.sections() if s not in SECTIONS]
    if unknown_sections:
        raise ConfigError(f"unknown sections: {', '.join(unknown_sections)}")
    values = {}
    unknown = []
    for section in SECTIONS:
        cls = get_type_hints(SimulationConfig)[section]
        hints = get_type_hints(cls)
        kwargs = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in hints:
                    unknown.append(f"{section}.{key}")
                    continue
                kwargs[key] = _convert(section, key, raw, hints[key])
        values[section] = cls(**kwargs)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    return validate(SimulationConfig(**values))


def load_config(path: Union[str, Path]) -> SimulationConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def dump_config(cfg: SimulationConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for section in SECTIONS:
        obj = getattr(cfg, section)
        parser[section] = {f.name: _format(getattr(obj, f.name)) for f in fields(obj)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def write_config(cfg: SimulationConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(dump_config(cfg))


def default_config() -> SimulationConfig:
    return validate(SimulationConfig())
