"""File formats: QTRC binary traces, CSV interop, calibration and fit JSON.

QTRC layout (little-endian):
    magic "QTRC" | version u32 = 1 | n_traces u64 | n_samples u64 | dt f64
    | setup-JSON length u32 | UTF-8 JSON (the flat setup/config document)
    | per trace: seed u64, projections u64, n_samples x (f64 I_z, f64 I_phi)

Reading maps the record block with numpy, so individual traces are touched
lazily; writing streams record by record.
"""

from __future__ import annotations

import csv
import json
import struct
from typing import Sequence

import numpy as np

from .analytic import CorrelatorCurve
from .errors import InvalidArgumentError, TraceFormatError
from .estimator import Calibration
from .fit import FitResult
from .model import MeasurementSetup, SimulationConfig, setup_config_from_dict, setup_config_to_dict
from .trajectory import TraceRecord

_MAGIC = b"QTRC"
_VERSION = 1
_HEAD = struct.Struct("<4sIQQdI")
_REC_HEAD = struct.Struct("<QQ")

PAIR_NAMES = {("z", "z"): "zz", ("z", "phi"): "zphi", ("phi", "z"): "phiz", ("phi", "phi"): "phiphi"}
NAME_PAIRS = {v: k for k, v in PAIR_NAMES.items()}
_PAIR_ORDER = (("z", "z"), ("z", "phi"), ("phi", "z"), ("phi", "phi"))


def write_traces(path, records: Sequence[TraceRecord], setup: MeasurementSetup,
                 config: SimulationConfig) -> None:
    doc = json.dumps(setup_config_to_dict(setup, config)).encode("utf-8")
    n_samples = records[0].n_samples if records else config.n_steps
    dt = records[0].dt if records else config.dt
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(_MAGIC, _VERSION, len(records), n_samples, dt, len(doc)))
        fh.write(doc)
        for rec in records:
            if rec.n_samples != n_samples:
                raise InvalidArgumentError("all traces must share the sample count")
            fh.write(_REC_HEAD.pack(rec.seed, rec.projections))
            fh.write(np.ascontiguousarray(rec.samples, dtype="<f8").tobytes())


class TraceWriter:
    """Streaming QTRC writer; usable as a simulate_ensemble sink."""

    def __init__(self, path, setup: MeasurementSetup, config: SimulationConfig):
        self._doc = json.dumps(setup_config_to_dict(setup, config)).encode("utf-8")
        self._fh = open(path, "wb")
        self._n_samples = config.n_steps
        self._dt = config.dt
        self._count = 0
        # placeholder count, fixed on close
        self._fh.write(_HEAD.pack(_MAGIC, _VERSION, 0, self._n_samples, self._dt, len(self._doc)))
        self._fh.write(self._doc)

    def __call__(self, rec: TraceRecord) -> None:
        self.write(rec)

    def write(self, rec: TraceRecord) -> None:
        if rec.n_samples != self._n_samples:
            raise InvalidArgumentError("trace sample count does not match the header")
        self._fh.write(_REC_HEAD.pack(rec.seed, rec.projections))
        self._fh.write(np.ascontiguousarray(rec.samples, dtype="<f8").tobytes())
        self._count += 1

    def close(self) -> None:
        self._fh.seek(0)
        self._fh.write(_HEAD.pack(_MAGIC, _VERSION, self._count, self._n_samples,
                                  self._dt, len(self._doc)))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_traces(path) -> tuple[list[TraceRecord], MeasurementSetup, SimulationConfig]:
    """Load a QTRC file; trace samples are memory-mapped views."""
    with open(path, "rb") as fh:
        head = fh.read(_HEAD.size)
        if len(head) < _HEAD.size:
            raise TraceFormatError("truncated header")
        magic, version, n_traces, n_samples, dt, json_len = _HEAD.unpack(head)
        if magic != _MAGIC:
            raise TraceFormatError("not a QTRC file")
        if version != _VERSION:
            raise TraceFormatError(f"unsupported QTRC version {version}")
        doc = fh.read(json_len)
        if len(doc) < json_len:
            raise TraceFormatError("truncated setup document")
        offset = fh.tell()
    setup, config = setup_config_from_dict(json.loads(doc.decode("utf-8")))
    if n_traces == 0:
        return [], setup, config

    rec_dtype = np.dtype(
        [("seed", "<u8"), ("projections", "<u8"), ("samples", "<f8", (n_samples, 2))]
    )
    try:
        data = np.memmap(path, dtype=rec_dtype, mode="r", offset=offset, shape=(n_traces,))
    except ValueError as exc:
        raise TraceFormatError(f"record block malformed: {exc}") from None
    records = [
        TraceRecord(
            dt=dt,
            samples=data["samples"][k],
            seed=int(data["seed"][k]),
            projections=int(data["projections"][k]),
        )
        for k in range(n_traces)
    ]
    return records, setup, config


def export_traces_csv(path, records: Sequence[TraceRecord]) -> None:
    """Interoperability export: trace, t, I_z, I_phi (one row per sample)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trace", "t", "I_z", "I_phi"])
        for rec in records:
            for n in range(rec.n_samples):
                writer.writerow(
                    [rec.seed, repr(n * rec.dt),
                     repr(float(rec.samples[n, 0])), repr(float(rec.samples[n, 1]))]
                )


def read_traces_csv(path) -> list[TraceRecord]:
    """Parse the CSV trace export (projection counts are not stored there)."""
    groups: dict[int, list[tuple[float, float, float]]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["trace", "t", "I_z", "I_phi"]:
            raise TraceFormatError("unexpected trace CSV header")
        for row in reader:
            groups.setdefault(int(row[0]), []).append(
                (float(row[1]), float(row[2]), float(row[3]))
            )
    records = []
    for seed in sorted(groups):
        rows = groups[seed]
        times = np.array([r[0] for r in rows])
        if times.size > 1:
            dt = float(times[1] - times[0])
        else:
            dt = float(times[0]) if times[0] > 0 else 1.0
        samples = np.array([[r[1], r[2]] for r in rows])
        records.append(TraceRecord(dt=dt, samples=samples, seed=seed, projections=0))
    return records


def write_correlators_csv(path, curves: dict[tuple[str, str], CorrelatorCurve],
                          include_stderr: bool = True) -> None:
    """CSV with one row per lag; columns K_<pair> plus optional err_<pair>."""
    pairs = [p for p in _PAIR_ORDER if p in curves]
    if not pairs:
        raise InvalidArgumentError("no curves to write")
    lags = curves[pairs[0]].lags
    for p in pairs:
        if not np.array_equal(curves[p].lags, lags):
            raise InvalidArgumentError("curves must share the lag grid")
    with_err = include_stderr and all(curves[p].stderr is not None for p in pairs)
    header = ["tau"] + [f"K_{PAIR_NAMES[p]}" for p in pairs]
    if with_err:
        header += [f"err_{PAIR_NAMES[p]}" for p in pairs]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(lags.size):
            row = [repr(float(lags[k]))] + [repr(float(curves[p].values[k])) for p in pairs]
            if with_err:
                row += [repr(float(curves[p].stderr[k])) for p in pairs]
            writer.writerow(row)


def read_correlators_csv(path) -> dict[tuple[str, str], CorrelatorCurve]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "tau":
            raise TraceFormatError("unexpected correlator CSV header")
        rows = [[float(cell) for cell in row] for row in reader]
    table = np.array(rows) if rows else np.empty((0, len(header)))
    lags = table[:, 0]
    curves = {}
    for col, name in enumerate(header):
        if not name.startswith("K_"):
            continue
        pair = NAME_PAIRS.get(name[2:])
        if pair is None:
            raise TraceFormatError(f"unknown correlator column {name}")
        err_name = f"err_{name[2:]}"
        stderr = table[:, header.index(err_name)] if err_name in header else None
        curves[pair] = CorrelatorCurve(lags=lags, values=table[:, col], stderr=stderr,
                                       labels=pair)
    if not curves:
        raise TraceFormatError("no correlator columns found")
    return curves


def load_calibration(path) -> Calibration:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    keys = {"response_z", "response_phi", "offset_z", "offset_phi"}
    unknown = sorted(set(doc) - keys)
    if unknown:
        raise InvalidArgumentError(f"unknown calibration keys: {', '.join(unknown)}")
    return Calibration(
        response_z=float(doc.get("response_z", 2.0)),
        response_phi=float(doc.get("response_phi", 2.0)),
        offset_z=float(doc.get("offset_z", 0.0)),
        offset_phi=float(doc.get("offset_phi", 0.0)),
    )


def dump_fit_result(path, parameter: str, result: FitResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "parameter": parameter,
                "value": result.value,
                "stderr": result.stderr,
                "residual_norm": result.residual_norm,
                "n_points": result.n_points,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
