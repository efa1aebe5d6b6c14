"""
File ingestion and export.

All text files share one layout: ``# key: value`` header comments, then comma
separated UTF-8 rows with LF line endings. Writes go through a temporary file in
the target directory and are renamed into place.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
import tempfile
from collections.abc import Iterable, Mapping
from dataclasses import asdict
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..domain.models import (
    CorrelationOracle,
    ObservableCurve,
    ObservableKind,
    RawSpectrum,
    RunManifest,
    SMatrixSeries,
    XiTable,
)
from ..infrastructure.exceptions import DataFormatError, ExportError
from ..infrastructure.logging import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.12g"
S_MATRIX_COLUMNS = (
    "freq_ghz",
    "re_s_aa",
    "im_s_aa",
    "re_s_ab",
    "im_s_ab",
    "re_s_ba",
    "im_s_ba",
    "re_s_bb",
    "im_s_bb",
)
TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "joblib", "spectral-transition-lab")


# --------------------------------------------------------------------------
# Low-level helpers
# --------------------------------------------------------------------------


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write ``text`` to ``path`` through a same-directory temporary file."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise ExportError(f"Could not write {target}: {e}", target.suffix.lstrip(".")) from e
    return target


def _header_lines(header: Mapping[str, Any] | None) -> str:
    if not header:
        return ""
    lines = []
    for key, value in header.items():
        if isinstance(value, (list, tuple, dict)):
            value = json.dumps(value, sort_keys=True)
        lines.append(f"# {key}: {value}\n")
    return "".join(lines)


def _parse_header_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _split_header(path: Path) -> tuple[dict[str, Any], list[tuple[int, str]]]:
    """Header mapping and the numbered non-comment, non-blank lines of a file."""
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise DataFormatError("file not found", str(path)) from e
    except UnicodeDecodeError as e:
        raise DataFormatError("file is not UTF-8 text", str(path)) from e
    header: dict[str, Any] = {}
    rows = []
    for number, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, sep, value = stripped.lstrip("#").partition(":")
            if sep and key.strip():
                header[key.strip()] = _parse_header_value(value.strip())
            continue
        rows.append((number, stripped))
    return header, rows


def _frame_text(frame: pd.DataFrame, header: Mapping[str, Any] | None) -> str:
    body = io.StringIO()
    frame.to_csv(body, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return _header_lines(header) + body.getvalue()


def file_digest(path: str | Path) -> str:
    """sha256 hex digest of a file."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def package_versions(packages: Iterable[str] = TRACKED_PACKAGES) -> dict[str, str]:
    versions = {}
    for name in packages:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


# --------------------------------------------------------------------------
# Level files
# --------------------------------------------------------------------------


def read_levels(path: str | Path) -> RawSpectrum:
    """
    Read a level file: one level per line, ``#`` comments, optional ``# key: value`` header.

    Raises:
        DataFormatError: on non-numeric, non-finite, unsorted or duplicate rows,
            naming the file and line
    """
    path = Path(path)
    header, rows = _split_header(path)
    values = np.empty(len(rows))
    previous = -math.inf
    for k, (number, text) in enumerate(rows):
        try:
            value = float(text.split(",")[0])
        except ValueError as e:
            raise DataFormatError(f"not a number: {text!r}", str(path), number) from e
        if not math.isfinite(value):
            raise DataFormatError(f"non-finite level {text!r}", str(path), number)
        if value == previous:
            raise DataFormatError(f"duplicate level {value:g}", str(path), number)
        if value < previous:
            raise DataFormatError(f"level {value:g} is out of order", str(path), number)
        values[k] = previous = value
    if values.size == 0:
        raise DataFormatError("no levels in file", str(path))
    logger.debug("Read %d levels from %s", values.size, path)
    return RawSpectrum(
        levels=values,
        source=str(header.get("source", path.name)),
        unit=str(header.get("unit", "dimensionless")),
        meta=header,
    )


def write_levels(path: str | Path, levels: np.ndarray, header: Mapping[str, Any]) -> Path:
    text = _header_lines(header) + "".join(f"{x:.17g}\n" for x in np.asarray(levels))
    return atomic_write_text(path, text)


# --------------------------------------------------------------------------
# Curves and tables
# --------------------------------------------------------------------------


def curve_frame(curve: ObservableCurve) -> pd.DataFrame:
    stderr = curve.stderr if curve.stderr is not None else np.full(curve.values.shape, np.nan)
    return pd.DataFrame({"grid": curve.grid, "value": curve.values, "stderr": stderr})


def write_curve(
    path: str | Path, curve: ObservableCurve, header: Mapping[str, Any] | None = None
) -> Path:
    meta = {"observable": curve.observable.value}
    meta.update({k: v for k, v in curve.meta.items() if _is_plain(v)})
    meta.update(header or {})
    return atomic_write_text(path, _frame_text(curve_frame(curve), meta))


def read_curve(path: str | Path) -> ObservableCurve:
    """Read a ``grid,value,stderr`` curve file written by :func:`write_curve`."""
    path = Path(path)
    header, _ = _split_header(path)
    try:
        frame = pd.read_csv(path, comment="#")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataFormatError(str(e), str(path)) from e
    missing = {"grid", "value"} - set(frame.columns)
    if missing:
        raise DataFormatError(f"missing columns {sorted(missing)}", str(path))
    try:
        kind = ObservableKind(header.get("observable", ObservableKind.CORRELATION.value))
    except ValueError as e:
        raise DataFormatError(f"unknown observable {header.get('observable')!r}", str(path)) from e
    stderr = frame["stderr"].to_numpy(float) if "stderr" in frame else None
    return ObservableCurve(
        kind,
        frame["grid"].to_numpy(float),
        frame["value"].to_numpy(float),
        stderr,
        meta=header,
    )


def write_frame(
    path: str | Path, frame: pd.DataFrame, header: Mapping[str, Any] | None = None
) -> Path:
    return atomic_write_text(path, _frame_text(frame, header))


def write_xi_table(path: str | Path, table: XiTable) -> Path:
    frame = pd.DataFrame({"xi": table.xi, "ccross": table.ccross, "stderr": table.stderr})
    header = {
        "t_a": table.t_a,
        "t_b": table.t_b,
        "tau_abs": table.tau_abs,
        "realizations": table.realizations,
    }
    return atomic_write_text(path, _frame_text(frame, header))


def read_xi_table(path: str | Path) -> XiTable:
    path = Path(path)
    header, _ = _split_header(path)
    for key in ("t_a", "t_b", "tau_abs"):
        if not isinstance(header.get(key), (int, float)):
            raise DataFormatError(f"xi table header lacks {key}", str(path))
    frame = pd.read_csv(path, comment="#")
    return XiTable(
        t_a=float(header["t_a"]),
        t_b=float(header["t_b"]),
        tau_abs=float(header["tau_abs"]),
        xi=frame["xi"].to_numpy(float),
        ccross=frame["ccross"].to_numpy(float),
        stderr=frame["stderr"].to_numpy(float),
        realizations=int(header.get("realizations", 0)),
    )


def write_oracle(path: str | Path, oracle: CorrelationOracle) -> Path:
    """One ``eps`` column plus one column per τ_abs grid point."""
    columns = {"eps": oracle.eps}
    columns.update({f"tau_{tau:.6g}": row for tau, row in zip(oracle.tau_abs, oracle.curves)})
    header = {k: v for k, v in oracle.meta.items() if _is_plain(v)}
    header["tau_abs"] = [float(t) for t in oracle.tau_abs]
    return atomic_write_text(path, _frame_text(pd.DataFrame(columns), header))


def read_oracle(path: str | Path) -> CorrelationOracle:
    path = Path(path)
    header, _ = _split_header(path)
    taus = header.pop("tau_abs", None)
    if not isinstance(taus, list):
        raise DataFormatError("oracle header lacks the tau_abs grid", str(path))
    frame = pd.read_csv(path, comment="#")
    curves = frame.drop(columns="eps").to_numpy(float).T
    return CorrelationOracle(
        eps=frame["eps"].to_numpy(float),
        tau_abs=np.asarray(taus, dtype=float),
        curves=curves,
        meta=header,
    )


def _is_plain(value: Any) -> bool:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return True
    if isinstance(value, (list, tuple)):
        return all(isinstance(v, (str, int, float, bool)) for v in value)
    return False


# --------------------------------------------------------------------------
# S-matrix files
# --------------------------------------------------------------------------


def read_s_matrix(path: str | Path) -> SMatrixSeries:
    """
    Read a 9-column S-matrix file: frequency in GHz, then Re/Im of S_aa, S_ab, S_ba, S_bb.

    Raises:
        DataFormatError: on a wrong column count, non-numeric entries or
            non-increasing frequencies, naming the file and line
    """
    path = Path(path)
    header, rows = _split_header(path)
    if rows and not _numeric(rows[0][1].split(",")[0]):
        rows = rows[1:]  # column-name row
    data = np.empty((len(rows), len(S_MATRIX_COLUMNS)))
    for k, (number, text) in enumerate(rows):
        fields = text.split(",")
        if len(fields) != len(S_MATRIX_COLUMNS):
            raise DataFormatError(
                f"expected {len(S_MATRIX_COLUMNS)} columns, found {len(fields)}",
                str(path),
                number,
            )
        try:
            data[k] = [float(x) for x in fields]
        except ValueError as e:
            raise DataFormatError(f"non-numeric entry in {text!r}", str(path), number) from e
        if k > 0 and data[k, 0] <= data[k - 1, 0]:
            raise DataFormatError("frequencies must increase", str(path), number)
    if data.shape[0] < 2:
        raise DataFormatError("an S-matrix file needs at least two frequencies", str(path))
    s = (data[:, 1::2] + 1j * data[:, 2::2]).reshape(-1, 2, 2)
    return SMatrixSeries(
        data[:, 0], s, source=str(header.get("source", path.name)), unit=header.get("unit", "GHz")
    )


def write_s_matrix(path: str | Path, series: SMatrixSeries) -> Path:
    flat = series.s.reshape(-1, 4)
    columns: dict[str, np.ndarray] = {"freq_ghz": series.frequencies}
    for k, name in enumerate(("s_aa", "s_ab", "s_ba", "s_bb")):
        columns[f"re_{name}"] = flat[:, k].real
        columns[f"im_{name}"] = flat[:, k].imag
    header = {"source": series.source, "unit": series.unit}
    return atomic_write_text(path, _frame_text(pd.DataFrame(columns), header))


def _numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


# --------------------------------------------------------------------------
# Run manifest
# --------------------------------------------------------------------------


def write_manifest(path: str | Path, manifest: RunManifest) -> Path:
    """Serialize a run manifest as sorted, indented JSON."""
    payload = asdict(manifest)
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    written = atomic_write_text(path, text)
    logger.info("Manifest written to %s (%d outputs)", written, len(manifest.outputs))
    return written


def read_manifest(path: str | Path) -> RunManifest:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return RunManifest(**payload)
    except (OSError, json.JSONDecodeError, TypeError) as e:
        raise DataFormatError(f"unreadable manifest: {e}", str(path)) from e


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value"):
        return value.value
    return str(value)
