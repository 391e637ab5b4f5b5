"""Case scenarios, the Wi-Fi offloading state machine and energy accounting."""

import itertools
import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

from .antenna import ArrayLayout, Role, qualifying_pairs
from .errors import LayoutError, ScheduleError, TraceError

log = logging.getLogger(__name__)

UL_PER_BASELINE = 4
KEEP_ALIVE_UL = 2
OFFLOAD_COUNT = 2


class ScenarioId(str, Enum):
    BASELINE_8 = 'BASELINE_8'
    CASE1_OFFLOAD = 'CASE1_OFFLOAD'
    CASE2_SECTIONED = 'CASE2_SECTIONED'
    CASE3_COMBINED = 'CASE3_COMBINED'

    @property
    def offloads(self) -> bool:
        return self in (ScenarioId.CASE1_OFFLOAD, ScenarioId.CASE3_COMBINED)

    @property
    def sectioned(self) -> bool:
        return self in (ScenarioId.CASE2_SECTIONED, ScenarioId.CASE3_COMBINED)


ALL_SCENARIOS = tuple(ScenarioId)


def _check_base(base: ArrayLayout):
    if len(base) != 8 or base.count(Role.UL, False) != 4 or base.count(Role.DL, False) != 4:
        raise LayoutError("base layout must have 8 elements with 4 UL and 4 DL roles")
    if not all(e.active for e in base.elements):
        raise LayoutError("base layout must have every element active")


def offload_most_coupled(layout: ArrayLayout, count: int = OFFLOAD_COUNT) -> Tuple[int, ...]:
    """UL elements whose removal drops the most UL/DL adjacency terms.

    Ties go to the lexicographically smallest index set.
    """
    ul = [e.index for e in layout.elements if e.role == Role.UL and e.active]
    best, best_left = None, None
    for combo in itertools.combinations(ul, count):
        left = len(qualifying_pairs(layout.deactivate(combo)))
        if best_left is None or left < best_left:
            best, best_left = combo, left
    return best


def offload_farthest(layout: ArrayLayout, count: int = OFFLOAD_COUNT) -> Tuple[int, ...]:
    """UL elements farthest from any DL element (keeps the section junction)."""
    dl = [e.index for e in layout.elements if e.role == Role.DL]
    ul = [e.index for e in layout.elements if e.role == Role.UL and e.active]
    ranked = sorted(ul, key=lambda i: (-min(abs(i - j) for j in dl), i))
    return tuple(sorted(ranked[:count]))


def apply_scenario(base: ArrayLayout, scenario: ScenarioId,
                   case1_offload: Optional[Sequence[int]] = None,
                   case3_offload: Optional[Sequence[int]] = None) -> ArrayLayout:
    """Derive the layout of ``scenario`` from the alternating 8-element base.

    Offloading deactivates two UL elements. By default Case 1 removes the
    pair with the most UL/DL adjacencies and Case 3 removes the UL elements
    farthest from the DL block, leaving the single junction pair in place.
    """
    scenario = ScenarioId(scenario)
    _check_base(base)
    if scenario == ScenarioId.BASELINE_8:
        return base
    layout = base
    if scenario.sectioned:
        layout = layout.with_roles([Role.UL] * 4 + [Role.DL] * 4)
    if scenario.offloads:
        chosen = case1_offload if scenario == ScenarioId.CASE1_OFFLOAD else case3_offload
        if chosen is None:
            pick = offload_most_coupled if scenario == ScenarioId.CASE1_OFFLOAD else offload_farthest
            chosen = pick(layout)
        chosen = tuple(chosen)
        if len(set(chosen)) != OFFLOAD_COUNT:
            raise LayoutError(f"offload list must name {OFFLOAD_COUNT} distinct elements")
        roles = {e.index: e.role for e in layout.elements}
        if any(roles.get(i) != Role.UL for i in chosen):
            raise LayoutError(f"offload list {chosen} must name UL elements")
        layout = layout.deactivate(chosen)
    return layout


# -- connectivity state machine -------------------------------------------

class Rrc(str, Enum):
    IDLE = 'IDLE'
    CONNECTED = 'CONNECTED'


class EventKind(str, Enum):
    RRC_SETUP_DONE = 'RRC_SETUP_DONE'
    WIFI_ON = 'WIFI_ON'
    WIFI_OFF = 'WIFI_OFF'
    SNR_REPORT = 'SNR_REPORT'
    CALL_SETUP = 'CALL_SETUP'


@dataclass(frozen=True)
class Event:
    kind: EventKind
    snr_wifi: Optional[float] = None
    snr_cellular: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', EventKind(self.kind))
        if self.kind == EventKind.SNR_REPORT and (self.snr_wifi is None or self.snr_cellular is None):
            raise TraceError("SNR_REPORT needs a Wi-Fi and a cellular SNR")

    def __str__(self):
        if self.kind == EventKind.SNR_REPORT:
            return f"{self.kind.value} {self.snr_wifi:g} {self.snr_cellular:g}"
        return self.kind.value


@dataclass(frozen=True)
class ConnectivityState:
    rrc: Rrc = Rrc.IDLE
    wifi_flag: int = 0
    snr_wifi: Optional[float] = None      # dB, last accepted report
    snr_cellular: Optional[float] = None  # dB
    offloaded_tx: int = 0
    in_call: bool = False

    @property
    def active_ul(self) -> int:
        return UL_PER_BASELINE - self.offloaded_tx


def step_connectivity(state: ConnectivityState, event: Event,
                      margin_db: float = 0.0) -> ConnectivityState:
    """Advance the Case-1 offloading controller by one event.

    Offloading engages on an SNR report while Wi-Fi is on and
    ``snr_wifi > snr_cellular + margin_db``; it is released by WIFI_OFF or a
    report with ``snr_wifi <= snr_cellular``. Reports arriving before RRC
    setup are ignored.
    """
    kind = event.kind
    if kind == EventKind.RRC_SETUP_DONE:
        return replace(state, rrc=Rrc.CONNECTED)
    if kind == EventKind.WIFI_ON:
        return replace(state, wifi_flag=1)
    if kind == EventKind.WIFI_OFF:
        return replace(state, wifi_flag=0, offloaded_tx=0)
    if kind == EventKind.SNR_REPORT:
        if state.rrc != Rrc.CONNECTED:
            log.warning("SNR_REPORT before RRC setup ignored")
            return state
        w, c = float(event.snr_wifi), float(event.snr_cellular)
        offloaded = state.offloaded_tx
        if w <= c:
            offloaded = 0
        elif state.wifi_flag == 1 and w > c + margin_db:
            offloaded = OFFLOAD_COUNT
        return replace(state, snr_wifi=w, snr_cellular=c, offloaded_tx=offloaded)
    if kind == EventKind.CALL_SETUP:
        if state.rrc != Rrc.CONNECTED:
            log.warning("CALL_SETUP before RRC setup not admitted")
            return state
        return replace(state, in_call=True)
    raise TraceError(f"unhandled event {kind}")


@dataclass(frozen=True)
class TraceEntry:
    t_s: float
    event: Event


def parse_trace(text: str) -> List[TraceEntry]:
    """Parse ``t_seconds EVENT [args]`` lines; '#' starts a comment."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise TraceError(f"line {lineno}: expected 't_seconds EVENT [args]'")
        try:
            t = float(parts[0])
            kind = EventKind(parts[1].upper())
        except ValueError:
            raise TraceError(f"line {lineno}: cannot parse {line!r}") from None
        args = parts[2:]
        try:
            if kind == EventKind.SNR_REPORT:
                if len(args) != 2:
                    raise TraceError(f"line {lineno}: SNR_REPORT takes 2 arguments")
                event = Event(kind, float(args[0]), float(args[1]))
            else:
                if args:
                    raise TraceError(f"line {lineno}: {kind.value} takes no arguments")
                event = Event(kind)
        except ValueError:
            raise TraceError(f"line {lineno}: bad SNR value in {line!r}") from None
        if t < 0 or (entries and t < entries[-1].t_s):
            raise TraceError(f"line {lineno}: timestamps must be non-negative and non-decreasing")
        entries.append(TraceEntry(t, event))
    return entries


def read_trace(path: Union[str, Path]) -> List[TraceEntry]:
    return parse_trace(Path(path).read_text())


def replay(entries: Iterable[TraceEntry], margin_db: float = 0.0,
           initial: ConnectivityState = ConnectivityState()) -> List[Tuple[TraceEntry, ConnectivityState]]:
    """Run the controller over a trace; returns each entry with the state after it."""
    state = initial
    out = []
    for entry in entries:
        state = step_connectivity(state, entry.event, margin_db)
        out.append((entry, state))
    return out


DEFAULT_TRACE = """\
# t_seconds EVENT [args]
0 RRC_SETUP_DONE
5 WIFI_ON
10 SNR_REPORT 30 20
40 CALL_SETUP
60 SNR_REPORT 18 22
70 SNR_REPORT 31 21
90 WIFI_OFF
100 SNR_REPORT 30 20
"""


# -- energy ---------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleInterval:
    start_s: float
    duration_s: float
    ul_count: int
    dl_count: int
    power_w: float
    interference_w: float = 0.0


@dataclass(frozen=True)
class PowerSchedule:
    intervals: Tuple[ScheduleInterval, ...] = ()

    def __post_init__(self):
        ivs = tuple(self.intervals)
        object.__setattr__(self, 'intervals', ivs)
        for i, iv in enumerate(ivs):
            if iv.duration_s < 0:
                raise ScheduleError(f"interval {i} has negative duration")
            if iv.ul_count < 0 or iv.dl_count < 0 or iv.power_w < 0 or iv.interference_w < 0:
                raise ScheduleError(f"interval {i} has negative counts or powers")
            if i and abs(iv.start_s - (ivs[i - 1].start_s + ivs[i - 1].duration_s)) > 1e-9:
                raise ScheduleError(f"interval {i} is not contiguous with interval {i - 1}")

    @property
    def end_s(self) -> float:
        if not self.intervals:
            return 0.0
        last = self.intervals[-1]
        return last.start_s + last.duration_s

    def then(self, other: 'PowerSchedule') -> 'PowerSchedule':
        """Concatenate, shifting ``other`` to start where this schedule ends."""
        if not other.intervals:
            return self
        shift = self.end_s - other.intervals[0].start_s
        moved = tuple(replace(iv, start_s=iv.start_s + shift) for iv in other.intervals)
        return PowerSchedule(self.intervals + moved)


def constant_schedule(duration_s: float, ul_count: int, dl_count: int, power_w: float,
                      interference_w: float = 0.0) -> PowerSchedule:
    return PowerSchedule((ScheduleInterval(0.0, duration_s, ul_count, dl_count, power_w,
                                           interference_w),))


@dataclass(frozen=True)
class EnergyReport:
    total_j: float
    ul_j: float
    dl_j: float
    interference_j: float = 0.0


def energy_consumed(schedule: PowerSchedule) -> EnergyReport:
    """Energy drawn by the active elements (and dissipated in adjacency
    coupling) over every interval of the schedule."""
    ul = sum(iv.ul_count * iv.power_w * iv.duration_s for iv in schedule.intervals)
    dl = sum(iv.dl_count * iv.power_w * iv.duration_s for iv in schedule.intervals)
    coupling = sum(iv.interference_w * iv.duration_s for iv in schedule.intervals)
    return EnergyReport(ul + dl + coupling, ul, dl, coupling)


def schedule_from_replay(steps: Sequence[Tuple[TraceEntry, ConnectivityState]], end_s: float,
                         power_w: float, dl_count: int = 4,
                         interference_for: Optional[Callable[[int], float]] = None) -> PowerSchedule:
    """Piecewise-constant schedule following the active UL count of a replay.

    Time before the first event runs with all UL elements active.
    """
    coupling = interference_for or (lambda ul: 0.0)
    marks = [(0.0, UL_PER_BASELINE)] + [(e.t_s, s.active_ul) for e, s in steps]
    intervals = []
    for (t0, ul), (t1, _) in zip(marks, marks[1:] + [(max(end_s, marks[-1][0]), None)]):
        if t1 > t0:
            intervals.append(ScheduleInterval(t0, t1 - t0, ul, dl_count, power_w, coupling(ul)))
    return PowerSchedule(tuple(intervals))
