"""Batch engine: parameter grids of cycles and correlations, CSV/JSON emitters."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .config import (
    CORRELATION_OUTPUTS,
    CYCLE_OUTPUTS,
    SPECTRAL_OUTPUTS,
    SweepSpec,
    resolve,
)
from .correlations import correlate
from .cycle import CycleProtocol, coupling_protocol, cycle_from_energies, frequency_protocol
from .spectral import ModelParams, auto_converge, diagonalize, diagonalize_bare

SCHEMA = "dicke-otto/phase-grid"
SCHEMA_VERSION = 1


class SweepIOError(OSError):
    """Writing sweep artifacts failed; the grid was flushed where possible."""


@dataclass
class PhaseGrid:
    axes: list
    outputs: list
    cells: list
    provenance: dict
    complete: bool = True

    @property
    def shape(self) -> tuple:
        return tuple(len(a["values"]) for a in self.axes)

    def column(self, name: str) -> list:
        return [c.get(name) for c in self.cells]

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "schema_version": SCHEMA_VERSION,
            "complete": self.complete,
            "axes": self.axes,
            "outputs": self.outputs,
            "cells": self.cells,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseGrid":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"not a phase grid document (schema={d.get('schema')!r})")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        return cls(d["axes"], d["outputs"], d["cells"], d["provenance"], d["complete"])


# ---------------------------------------------------------------------------
# cell evaluation


def protocol_for(v: dict) -> CycleProtocol:
    if v["protocol"] == "coupling":
        omega = v.get("omega", v["omega_c"])
        return coupling_protocol(
            v.get("lambda_hot", v["lambda"]),
            v.get("lambda_cold", v["lambda"]),
            v["n_qubits"],
            omega,
            v["t_hot"],
            v["t_cold"],
            v["n_tr"],
        )
    return frequency_protocol(
        v["lambda"], v["n_qubits"], v["omega_h"], v["omega_c"], v["t_hot"], v["t_cold"],
        v["n_tr"], v["lambda_mode"],
    )


def correlation_model(v: dict) -> ModelParams:
    """Working substance probed for correlations: the resonant cold-side Hamiltonian."""
    omega = v.get("omega", v["omega_c"])
    return ModelParams(omega, omega, v["lambda"], v["n_qubits"], v["n_tr"])


def _float(x) -> Optional[float]:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


class _Cache:
    """Spectra keyed by (params, method, with-vectors); filled before cells run."""

    def __init__(self, auto: bool):
        self.auto = auto
        self.store: dict = {}

    def key_cycle(self, p: ModelParams, method: str):
        return ("cycle", p, method)

    def key_bare(self, p: ModelParams):
        return ("bare", p)

    def compute(self, key):
        try:
            if key[0] == "cycle":
                _, p, method = key
                if self.auto:
                    return auto_converge(p, method)
                return diagonalize(p, method, vectors=False)
            return diagonalize_bare(key[1])
        except Exception as exc:  # recorded per cell
            return exc


def _needed_keys(values: dict, outputs, cache: _Cache):
    keys = []
    if any(o in CYCLE_OUTPUTS for o in outputs):
        proto = protocol_for(values)
        keys += [cache.key_cycle(proto.hot, values["solver"]), cache.key_cycle(proto.cold, values["solver"])]
    if any(o in CORRELATION_OUTPUTS for o in outputs):
        keys.append(cache.key_bare(correlation_model(values)))
    if any(o in SPECTRAL_OUTPUTS for o in outputs):
        keys.append(cache.key_cycle(correlation_model(values), values["solver"]))
    return keys


def evaluate_cell(values: dict, outputs, cache: _Cache) -> dict:
    rec: dict = {}
    flags = set()
    if any(o in CYCLE_OUTPUTS for o in outputs):
        proto = protocol_for(values)
        hot = cache.store[cache.key_cycle(proto.hot, values["solver"])]
        cold = cache.store[cache.key_cycle(proto.cold, values["solver"])]
        for s in (hot, cold):
            if isinstance(s, Exception):
                raise s
        res = cycle_from_energies(hot.energies, cold.energies, proto.t_hot, proto.t_cold)
        rec.update(
            regime=res.regime,
            work=res.work,
            q_hot=res.q_hot,
            q_cold=res.q_cold,
            eta=res.eta,
            cop=res.cop,
            carnot_eta=res.carnot_eta,
            carnot_cop=_float(res.carnot_cop),
        )
        rec["n_tr_used"] = max(hot.n_tr, cold.n_tr)
    if any(o in CORRELATION_OUTPUTS for o in outputs):
        p = correlation_model(values)
        spec = cache.store[cache.key_bare(p)]
        if isinstance(spec, Exception):
            raise spec
        temperature = values.get("temperature", values["t_cold"])
        rep = correlate(p, temperature, values["partition"], spec=spec)
        rec.update(
            g2=_float(rep.g2_conventional),
            g2_generalized=_float(rep.g2_generalized),
            negativity=rep.negativity,
            mean_photon=rep.mean_photon,
        )
        flags |= set(rep.flags)
    if "gap" in outputs:
        spec = cache.store[cache.key_cycle(correlation_model(values), values["solver"])]
        if isinstance(spec, Exception):
            raise spec
        rec["gap"] = float(spec.energies[1] - spec.energies[0])
    out = {k: rec.get(k) for k in outputs}
    if "n_tr_used" in rec:
        out["n_tr_used"] = rec["n_tr_used"]
    out["flags"] = sorted(flags)
    return out


def _points(spec: SweepSpec):
    names = [a.name for a in spec.axes]
    for combo in itertools.product(*(a.values for a in spec.axes)):
        yield dict(zip(names, combo))


def _run_cell(point, spec, cache):
    values = resolve({**spec.fixed, **point})
    cell = dict(point)
    try:
        cell.update(evaluate_cell(values, spec.outputs, cache))
        cell["status"] = "ok"
        cell["error"] = None
    except Exception as exc:
        cell.update({k: None for k in spec.outputs})
        cell["flags"] = []
        cell["status"] = "failed"
        cell["error"] = f"{type(exc).__name__}: {exc}"
    return cell


def run_sweep(spec: SweepSpec, threads: Optional[int] = None) -> PhaseGrid:
    """Evaluate every grid cell; results do not depend on the thread count."""
    threads = threads or spec.threads
    cache = _Cache(spec.auto_converge)
    points = list(_points(spec))

    keys = []
    seen = set()
    for pt in points:
        try:
            ks = _needed_keys(resolve({**spec.fixed, **pt}), spec.outputs, cache)
        except Exception:
            continue  # the cell itself reports the failure
        for k in ks:
            if k not in seen:
                seen.add(k)
                keys.append(k)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for k, s in zip(keys, pool.map(cache.compute, keys)):
            cache.store[k] = s
        cells = list(pool.map(lambda pt: _run_cell(pt, spec, cache), points))

    n_tr_used = sorted({c["n_tr_used"] for c in cells if c.get("n_tr_used") is not None})
    provenance = {
        "code": "dicke_otto",
        "version": __version__,
        "spec": spec.to_dict(),
        "n_tr_used": n_tr_used,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    return PhaseGrid([a.to_dict() for a in spec.axes], list(spec.outputs), cells, provenance)


def regenerate(grid: PhaseGrid) -> PhaseGrid:
    """Re-run the sweep described by a grid's provenance block."""
    d = dict(grid.provenance["spec"])
    d.pop("output", None)
    return run_sweep(SweepSpec.from_dict(d))


# ---------------------------------------------------------------------------
# emitters


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    if isinstance(x, (list, tuple)):
        return ";".join(str(i) for i in x)
    return str(x)


def csv_columns(grid: PhaseGrid) -> list:
    cols = [a["name"] for a in grid.axes] + list(grid.outputs)
    if any("n_tr_used" in c for c in grid.cells):
        cols.append("n_tr_used")
    return cols + ["flags", "status", "error"]


def render_csv(grid: PhaseGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    cols = csv_columns(grid)
    w.writerow(cols)
    for c in grid.cells:
        w.writerow([_fmt(c.get(k)) for k in cols])
    return buf.getvalue()


def render_json(grid: PhaseGrid) -> str:
    return json.dumps(grid.to_dict(), indent=1, sort_keys=True, allow_nan=False) + "\n"


def _write(path, text: str):
    try:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise SweepIOError(f"cannot write {path}: {exc}") from exc


def emit_csv(grid: PhaseGrid, path) -> None:
    _write(path, render_csv(grid))


def emit_json(grid: PhaseGrid, path) -> None:
    _write(path, render_json(grid))


def load_json(path) -> PhaseGrid:
    with open(path, encoding="utf-8") as fh:
        return PhaseGrid.from_dict(json.load(fh))


def write_outputs(grid: PhaseGrid, csv_path=None, json_path=None) -> None:
    """Write requested artifacts; on failure flush the rest marked incomplete."""
    errors = []
    for path, emit in ((csv_path, emit_csv), (json_path, emit_json)):
        if not path:
            continue
        try:
            emit(grid, path)
        except SweepIOError as exc:
            errors.append(exc)
            grid.complete = False
    if errors:
        for path, emit in ((json_path, emit_json), (csv_path, emit_csv)):
            if path:
                try:
                    emit(grid, path)
                except SweepIOError:
                    pass
        raise errors[0]
