"""Tabular datasets, report bundles, and their CSV / JSON emission."""

import csv
import io
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np


@dataclass(frozen=True)
class Column:
    name: str
    unit: str
    values: Tuple

    @property
    def header(self) -> str:
        return f"{self.name}_{unit_token(self.unit)}" if self.unit else self.name


def unit_token(unit: str) -> str:
    return (unit.replace('%', 'percent').replace('/', '_per_').replace('^', '')
            .replace(' ', ''))


def _clean(v):
    if v is None:
        return None
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


@dataclass(frozen=True)
class Dataset:
    """One table of an experiment: ``axes`` name the independent columns."""
    name: str
    experiment: str
    axes: Tuple[str, ...]
    columns: Tuple[Column, ...]

    def __post_init__(self):
        cols = tuple(Column(c.name, c.unit, tuple(_clean(v) for v in c.values))
                     for c in self.columns)
        object.__setattr__(self, 'columns', cols)
        object.__setattr__(self, 'axes', tuple(self.axes))
        lengths = {len(c.values) for c in cols}
        if len(lengths) > 1:
            raise ValueError(f"dataset {self.name}: column lengths differ {sorted(lengths)}")
        names = [c.name for c in cols]
        missing = [a for a in self.axes if a not in names]
        if missing:
            raise ValueError(f"dataset {self.name}: axes {missing} are not columns")

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def __getitem__(self, name: str) -> np.ndarray:
        return np.array(self.column(name).values)

    @property
    def rows(self) -> int:
        return len(self.columns[0].values) if self.columns else 0

    @property
    def units(self) -> Dict[str, str]:
        return {c.name: c.unit for c in self.columns}


def dataset(name: str, experiment: str, axes: Sequence[str],
            columns: Sequence[Tuple[str, str, Sequence]]) -> Dataset:
    return Dataset(name, experiment, tuple(axes),
                   tuple(Column(n, u, tuple(v)) for n, u, v in columns))


@dataclass(frozen=True)
class ReportBundle:
    experiment: str
    datasets: Tuple[Dataset, ...] = ()
    manifest: Dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> Dataset:
        for d in self.datasets:
            if d.name == name:
                return d
        raise KeyError(name)


def _fmt(v) -> str:
    if v is None:
        return ''
    if isinstance(v, bool):
        return 'true' if v else 'false'
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dataset_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow([c.header for c in ds.columns])
    for row in zip(*(c.values for c in ds.columns)):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + '\n'


def bundle_json(bundle: ReportBundle) -> str:
    return _json_text({
        'experiment': bundle.experiment,
        'axes': {d.name: list(d.axes) for d in bundle.datasets},
        'units': {d.name: d.units for d in bundle.datasets},
        'data': {d.name: {c.name: list(c.values) for c in d.columns} for d in bundle.datasets},
        'manifest': bundle.manifest,
    })


def emit_report(bundle: ReportBundle, fmt: str, out_dir: Union[str, Path]) -> List[Path]:
    """Write the bundle under ``out_dir``; returns the written paths.

    Files are staged in a temporary directory inside ``out_dir`` and moved
    into place only once all of them have been written.
    """
    if fmt not in ('csv', 'json'):
        raise ValueError(f"unknown report format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: Dict[str, str] = {}
    if fmt == 'csv':
        for d in bundle.datasets:
            files[f"{d.name}.csv"] = dataset_csv(d)
        files['manifest.json'] = _json_text({'experiment': bundle.experiment,
                                             'datasets': [d.name for d in bundle.datasets],
                                             **bundle.manifest})
    else:
        files[f"{bundle.experiment}.json"] = bundle_json(bundle)
    stage = Path(tempfile.mkdtemp(prefix='.staging-', dir=out))
    try:
        for name, text in files.items():
            with open(stage / name, 'w', newline='') as fh:
                fh.write(text)
        written = []
        for name in files:
            os.replace(stage / name, out / name)
            written.append(out / name)
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return written


def read_csv_dataset(path: Union[str, Path]) -> Dict[str, List[str]]:
    """Columns of an emitted CSV as raw strings keyed by header."""
    with open(path, newline='') as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {h: [r[i] for r in body] for i, h in enumerate(header)}
