"""File formats: measurement/truth CSVs, config files, reports, tables.

All writers go through a write-to-temp-then-rename helper so a failure never
leaves a partial file behind.  Floats are serialized with 17 significant
digits, which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError
from .evaluation import CellResult, PairRecord, ScoreCard, SweepSpec
from .factor_analysis import FaOptions
from .model import AssignmentMatrix, KpiMatrix
from .pipeline import DetectionReport, DetectorOptions, Variant
from .simulator import SimConfig

REPORT_FORMAT = "slicesense-report-v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_short(x: float) -> str:
    # shortest representation that still round-trips exactly
    return repr(float(x))


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write a file atomically: temp file in the same directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


# ---------------------------------------------------------------- CSV files


def write_measurements_csv(path: str | Path, m: KpiMatrix) -> None:
    lines = ["period," + ",".join(f"ns_{i}" for i in range(m.n_slices))]
    for k, row in enumerate(m.values):
        lines.append(f"{k}," + ",".join(_fmt(x) for x in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_measurements_csv(path: str | Path) -> KpiMatrix:
    rows = _read_csv_rows(path)
    header = rows[0]
    if len(header) < 3 or header[0] != "period" or header[1] != "ns_0":
        raise DataFormatError(
            f"{path}: row 1: expected header 'period,ns_0,...', got {','.join(header[:3])}..."
        )
    n = len(header) - 1
    values = np.empty((len(rows) - 1, n))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != n + 1:
            raise DataFormatError(
                f"{path}: row {r}: expected {n + 1} fields, got {len(row)}"
            )
        for c, field in enumerate(row[1:], start=2):
            try:
                values[r - 2, c - 2] = float(field)
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {r}, column {c}: not a number: {field!r}"
                ) from None
    try:
        return KpiMatrix(values)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def write_truth_csv(path: str | Path, a: AssignmentMatrix) -> None:
    lines = ["resource," + ",".join(f"ns_{i}" for i in range(a.n_slices))]
    for j, row in enumerate(a.entries):
        lines.append(f"{j}," + ",".join(str(int(x)) for x in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_truth_csv(path: str | Path) -> AssignmentMatrix:
    rows = _read_csv_rows(path)
    header = rows[0]
    if len(header) < 3 or header[0] != "resource" or header[1] != "ns_0":
        raise DataFormatError(
            f"{path}: row 1: expected header 'resource,ns_0,...', got {','.join(header[:3])}..."
        )
    n = len(header) - 1
    entries = np.empty((len(rows) - 1, n), dtype=np.int8)
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != n + 1:
            raise DataFormatError(
                f"{path}: row {r}: expected {n + 1} fields, got {len(row)}"
            )
        for c, field in enumerate(row[1:], start=2):
            if field not in ("0", "1"):
                raise DataFormatError(
                    f"{path}: row {r}, column {c}: expected 0 or 1, got {field!r}"
                )
            entries[r - 2, c - 2] = int(field)
    try:
        return AssignmentMatrix(entries)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def _read_csv_rows(path: str | Path) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataFormatError(f"{path}: {exc.strerror}") from None
    if len(rows) < 2:
        raise DataFormatError(f"{path}: empty or header-only file")
    return rows


def write_utilization_csv(path: str | Path, trace: np.ndarray) -> None:
    lines = ["period," + ",".join(f"ns_{i}" for i in range(trace.shape[1]))]
    for k, row in enumerate(trace):
        lines.append(f"{k}," + ",".join(_fmt(x) for x in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


# ------------------------------------------------------------- config files


def parse_kv_text(text: str, origin: str = "config") -> dict[str, str]:
    """Parse ``key = value`` lines with ``#`` comments into a dict."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}: line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{origin}: line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"{origin}: line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


_REQUIRED = object()


def _parse_typed(kv: dict[str, str], key: str, kind, origin: str, default=_REQUIRED):
    if key not in kv:
        if default is _REQUIRED:
            raise ConfigError(f"{origin}: missing required key {key!r}")
        return default
    raw = kv.pop(key)
    try:
        if kind is bool:
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(
            f"{origin}: key {key!r}: cannot parse {raw!r} as {kind.__name__}"
        ) from None


def _parse_list(kv, key, kind, origin, default=None):
    if key not in kv:
        if default is None:
            raise ConfigError(f"{origin}: missing required key {key!r}")
        return default
    raw = kv.pop(key)
    try:
        return tuple(kind(part.strip()) for part in raw.split(",") if part.strip())
    except ValueError:
        raise ConfigError(
            f"{origin}: key {key!r}: cannot parse {raw!r} as list of {kind.__name__}"
        ) from None


def _reject_unknown(kv: dict[str, str], origin: str) -> None:
    if kv:
        raise ConfigError(f"{origin}: unknown key(s): {', '.join(sorted(kv))}")


def read_sim_config(path: str | Path) -> SimConfig:
    """Load a simulation config from a flat key = value file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    kv = parse_kv_text(text, origin=str(path))
    origin = str(path)
    alpha = _parse_typed(kv, "exp_averaging", float, origin, default=None)
    try:
        config = SimConfig(
            n_slices=_parse_typed(kv, "n_slices", int, origin),
            n_resources=_parse_typed(kv, "n_resources", int, origin),
            n_periods=_parse_typed(kv, "n_periods", int, origin),
            weight_shared=_parse_typed(kv, "weight_shared", float, origin),
            noise_variance=_parse_typed(kv, "noise_variance", float, origin),
            seed=_parse_typed(kv, "seed", int, origin),
            utilization_levels=_parse_list(
                kv, "utilization_levels", float, origin, default=(0.2, 0.5, 0.7, 0.9)
            ),
            diag_prob=_parse_typed(kv, "diag_prob", float, origin, default=0.25),
            offdiag_row_sum=_parse_typed(kv, "offdiag_row_sum", float, origin, default=0.75),
            g_threshold=_parse_typed(kv, "g_threshold", float, origin, default=0.6),
            h_threshold=_parse_typed(kv, "h_threshold", float, origin, default=0.65),
            exp_averaging=alpha,
            fixed_delay=_parse_typed(kv, "fixed_delay", float, origin, default=0.0),
            assignment_density=_parse_typed(
                kv, "assignment_density", float, origin, default=0.15
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    _reject_unknown(kv, origin)
    return config


def read_fa_options(kv: dict[str, str], origin: str) -> FaOptions:
    """Pop dotted ``fa.*`` keys out of a parsed config."""
    return FaOptions(
        max_iter=_parse_typed(kv, "fa.max_iter", int, origin, default=500),
        tol=_parse_typed(kv, "fa.tol", float, origin, default=1e-6),
        uniqueness_floor=_parse_typed(kv, "fa.uniqueness_floor", float, origin, default=1e-6),
        ridge=_parse_typed(kv, "fa.ridge", float, origin, default=1e-8),
        tie_tol=_parse_typed(kv, "fa.tie_tol", float, origin, default=1e-6),
        use_bic=_parse_typed(kv, "fa.use_bic", bool, origin, default=True),
    )


def read_detector_options(path: str | Path) -> DetectorOptions:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    origin = str(path)
    kv = parse_kv_text(text, origin=origin)
    variant = _parse_typed(kv, "variant", str, origin, default="fa")
    theta = _parse_typed(kv, "theta", float, origin, default=0.5)
    fa = read_fa_options(kv, origin)
    _reject_unknown(kv, origin)
    try:
        return DetectorOptions(variant=Variant.from_cli(variant), theta=theta, fa=fa)
    except ValueError as exc:
        raise ConfigError(f"{origin}: {exc}") from None


def read_sweep_spec(path: str | Path) -> SweepSpec:
    """Load a sweep specification from a flat key = value file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    origin = str(path)
    kv = parse_kv_text(text, origin=origin)
    base = SimConfig(
        n_slices=_parse_typed(kv, "n_slices", int, origin),
        n_resources=_parse_typed(kv, "n_resources", int, origin),
        n_periods=2,  # overridden by the grid
        weight_shared=0.0,
        noise_variance=0.0,
        seed=_parse_typed(kv, "seed", int, origin),
        utilization_levels=_parse_list(
            kv, "utilization_levels", float, origin, default=(0.2, 0.5, 0.7, 0.9)
        ),
        diag_prob=_parse_typed(kv, "diag_prob", float, origin, default=0.25),
        offdiag_row_sum=_parse_typed(kv, "offdiag_row_sum", float, origin, default=0.75),
        g_threshold=_parse_typed(kv, "g_threshold", float, origin, default=0.6),
        h_threshold=_parse_typed(kv, "h_threshold", float, origin, default=0.65),
        fixed_delay=_parse_typed(kv, "fixed_delay", float, origin, default=0.0),
        assignment_density=_parse_typed(
            kv, "assignment_density", float, origin, default=0.15
        ),
    )
    variants = _parse_list(kv, "variants", str, origin, default=("fa",))
    alphas_raw = _parse_list(kv, "alpha_values", str, origin, default=("none",))
    try:
        variants = tuple(Variant.from_cli(v) for v in variants)
    except ValueError as exc:
        raise ConfigError(f"{origin}: key 'variants': {exc}") from None
    alphas = []
    for a in alphas_raw:
        if a.lower() in ("none", "off"):
            alphas.append(None)
        else:
            try:
                alphas.append(float(a))
            except ValueError:
                raise ConfigError(
                    f"{origin}: key 'alpha_values': cannot parse {a!r}"
                ) from None
    theta = _parse_typed(kv, "theta", float, origin, default=0.5)
    fa = read_fa_options(kv, origin)
    try:
        spec = SweepSpec(
            base=base,
            t_values=_parse_list(kv, "t_values", int, origin),
            ws_values=_parse_list(kv, "ws_values", float, origin),
            sigma2_values=_parse_list(kv, "sigma2_values", float, origin),
            variants=variants,
            alpha_values=tuple(alphas),
            replicates=_parse_typed(kv, "replicates", int, origin, default=25),
            theta=theta,
            fa=fa,
        )
    except ValueError as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    _reject_unknown(kv, origin)
    return spec


# ----------------------------------------------------------- report files


def report_to_dict(report: DetectionReport) -> dict:
    out = {
        "format": REPORT_FORMAT,
        "variant": report.variant.name,
        "theta": report.theta,
        "n_slices": int(report.estimate.shape[1]),
        "estimated_count": int(report.estimated_count),
        "estimate": report.estimate.astype(int).tolist(),
        "warnings": list(report.warnings),
        "intermediates": None,
    }
    if report.intermediates is not None:
        inter = report.intermediates
        out["intermediates"] = {
            "correlation": inter.correlation.entries.tolist(),
            "graph": inter.graph.adjacency.astype(int).tolist(),
            "cliques": [sorted(c) for c in inter.cliques],
            "clique_fits": [asdict(f) for f in inter.clique_fits],
        }
    return out


def write_report_json(path: str | Path, report: DetectionReport) -> None:
    atomic_write_text(path, json.dumps(report_to_dict(report), indent=2) + "\n")


def read_report_json(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataFormatError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(data, dict) or data.get("format") != REPORT_FORMAT:
        raise DataFormatError(f"{path}: not a {REPORT_FORMAT} file")
    return data


# ------------------------------------------------------------ result tables

SWEEP_COLUMNS = ("t", "w_s", "sigma2", "variant", "alpha", "metric", "value", "replicates", "status")
SWEEP_METRICS = (
    "exact_fraction",
    "covered_fraction",
    "estimated_count",
    "stage1_missed",
    "stage1_false_pos",
)


def write_sweep_csv(path: str | Path, rows: list[CellResult]) -> None:
    """Long-format table: one line per (cell, metric) with the replicate mean."""
    lines = [",".join(SWEEP_COLUMNS)]
    for r in rows:
        alpha = "" if r.alpha is None else _fmt_short(r.alpha)
        for metric in SWEEP_METRICS:
            lines.append(
                ",".join(
                    (
                        str(r.t),
                        _fmt_short(r.w_s),
                        _fmt_short(r.sigma2),
                        r.variant.value,
                        alpha,
                        metric,
                        _fmt_short(getattr(r, metric)),
                        str(r.replicates),
                        r.status,
                    )
                )
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_corr_csv(path: str | Path, records: list[PairRecord]) -> None:
    lines = ["slice_i,slice_j,sharing,srcc,pcc,srcc_outcome,pcc_outcome"]
    for r in records:
        lines.append(
            f"{r.slice_i},{r.slice_j},{int(r.sharing)},{_fmt_short(r.srcc)},{_fmt_short(r.pcc)},"
            f"{r.srcc_outcome},{r.pcc_outcome}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def format_scorecard(card: ScoreCard) -> str:
    lines = [
        f"exact_fraction: {card.exact_fraction:.6f}",
        f"covered_fraction: {card.covered_fraction:.6f}",
        f"estimated_count: {card.estimated_count}",
        f"stage1_missed: {'n/a' if card.stage1_missed is None else card.stage1_missed}",
        f"stage1_false_pos: {'n/a' if card.stage1_false_pos is None else card.stage1_false_pos}",
    ]
    return "\n".join(lines)


def write_scorecard_json(path: str | Path, card: ScoreCard) -> None:
    atomic_write_text(path, json.dumps(asdict(card), indent=2) + "\n")
