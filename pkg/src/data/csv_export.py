"""
CSV and JSON export for check results and power curves.

Every writer takes either a file path, an open text stream (the CLI passes
stdout), or None to auto-generate a timestamped file name.
"""

import csv
import json
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from ..errors import ConfigError, DomainError
from .models import PowerCurve

Target = Union[str, Path, TextIO, None]

POWER_CURVE_HEADER = ['gamma', 'power', 'n_reps', 'alpha', 'seed']
LASSO_POWER_HEADER = ['q', 'power_kurtosis', 'power_score', 'n', 'p', 'm', 'tau', 'n_reps', 'seed']
HISTOGRAM_HEADER = ['bin_left', 'bin_right', 'density']


@contextmanager
def _open_target(target: Target, prefix: str, suffix: str = "csv"):
    if target is not None and not isinstance(target, (str, Path)):
        yield target, "<stream>"
        return
    if target is None:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        target = f"{prefix}_{timestamp}.{suffix}"
    filepath = Path(target)
    try:
        f = open(filepath, 'w', newline='')
    except OSError as e:
        raise ConfigError(f"cannot write output file {filepath}: {e}") from e
    with f:
        yield f, str(filepath)


def export_power_curve_csv(curve: PowerCurve, target: Target = None) -> str:
    """
    Export one power curve.

    Args:
        curve: PowerCurve to export
        target: Output path, open stream, or None for an auto-generated name

    Returns:
        Path of the written file ("<stream>" for streams)
    """
    with _open_target(target, "power_curve") as (f, name):
        writer = csv.writer(f)
        writer.writerow(POWER_CURVE_HEADER)
        for gamma, power in zip(curve.gamma_grid, curve.power):
            writer.writerow([gamma, power, curve.n_reps, curve.alpha, curve.seed])
    return name


def export_power_curves_csv(curves: Mapping[str, PowerCurve], target: Target = None) -> str:
    """Export several curves in long format with a leading `curve` column."""
    with _open_target(target, "power_curves") as (f, name):
        writer = csv.writer(f)
        writer.writerow(['curve'] + POWER_CURVE_HEADER)
        for label, curve in curves.items():
            for gamma, power in zip(curve.gamma_grid, curve.power):
                writer.writerow([label, gamma, power, curve.n_reps, curve.alpha, curve.seed])
    return name


def export_lasso_power_csv(studies: Iterable[Tuple[Mapping[str, PowerCurve], Mapping[str, Any]]],
                           target: Target = None) -> str:
    """
    Export paired kurtosis/score power curves, one row per (setting, q).

    Args:
        studies: (curves, setting) pairs; curves holds "kurtosis" and "score",
            setting holds n, p, m and tau (missing entries are left blank)
    """
    with _open_target(target, "lasso_power") as (f, name):
        writer = csv.writer(f)
        writer.writerow(LASSO_POWER_HEADER)
        for curves, setting in studies:
            kurtosis, score = curves['kurtosis'], curves['score']
            if kurtosis.gamma_grid != score.gamma_grid:
                raise DomainError("kurtosis and score curves use different q grids")
            for q, pk, ps in zip(kurtosis.gamma_grid, kurtosis.power, score.power):
                writer.writerow([
                    q, pk, ps,
                    setting.get('n', ''), setting.get('p', ''), setting.get('m', ''), setting.get('tau', ''),
                    kurtosis.n_reps, kurtosis.seed
                ])
    return name


def export_histogram_csv(draws: Sequence[float], bins: int = 60, target: Target = None) -> str:
    """Density histogram of simulated statistics."""
    density, edges = np.histogram(np.asarray(draws, dtype=float), bins=bins, density=True)
    with _open_target(target, "histogram") as (f, name):
        writer = csv.writer(f)
        writer.writerow(HISTOGRAM_HEADER)
        for left, right, d in zip(edges[:-1], edges[1:], density):
            writer.writerow([left, right, d])
    return name


def _jsonable(payload: Any) -> Any:
    if hasattr(payload, 'to_dict'):
        return payload.to_dict()
    if isinstance(payload, Mapping):
        return {str(k): _jsonable(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_jsonable(v) for v in payload]
    if isinstance(payload, np.ndarray):
        return payload.tolist()
    if isinstance(payload, np.generic):
        return payload.item()
    return payload


def export_json(payload: Any, target: Target = None) -> str:
    """Write a JSON document; objects with to_dict() are converted, nested ones too."""
    with _open_target(target, "result", suffix="json") as (f, name):
        json.dump(_jsonable(payload), f, indent=2)
        f.write("\n")
    return name


def read_power_curves_csv(filepath: str) -> dict:
    """Read a long-format curves file back into PowerCurve objects."""
    rows = {}
    with open(filepath, newline='') as f:
        for row in csv.DictReader(f):
            rows.setdefault(row['curve'], []).append(row)
    curves = {}
    for label, entries in rows.items():
        curves[label] = PowerCurve(
            gamma_grid=[float(r['gamma']) for r in entries],
            power=[float(r['power']) for r in entries],
            n_reps=int(entries[0]['n_reps']),
            alpha=float(entries[0]['alpha']),
            seed=int(entries[0]['seed']),
            label=label
        )
    return curves
