"""Command line front-end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import ast
import csv
import json
import sys
from collections import Counter
from pathlib import Path

from .config import ConfigError, SweepSpec, check_param, load_point, load_sweep, resolve
from .correlations import DensityMatrixError, correlate
from .cycle import ThermodynamicsError, run_cycle
from .spectral import (
    DimensionError,
    EigensolverError,
    ModelParams,
    auto_converge,
    diagonalize,
)
from .sweep import emit_csv, run_sweep, write_outputs, protocol_for

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4
REGIME_CHARS = {"Engine": "E", "Refrigerator": "R", "Heater": "H", "Accelerator": "A", "Degenerate": "."}


def _parse_set(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(item, "expected KEY=VALUE")
        key, raw = item.split("=", 1)
        key = key.strip().replace("-", "_")
        try:
            value = ast.literal_eval(raw)
        except (ValueError, SyntaxError):
            value = raw
        out[key] = check_param(key, value)
    return out


def _point_values(args) -> dict:
    values = load_point(args.config) if args.config else {}
    values.update(_parse_set(args.set))
    if args.ntr is not None:
        values["n_tr"] = check_param("n_tr", args.ntr)
    return resolve(values)


def _model(v: dict) -> ModelParams:
    try:
        return ModelParams(v["omega0"], v["delta"], v["lambda"], v["n_qubits"], v["n_tr"])
    except ValueError as exc:
        raise ConfigError("params", str(exc)) from exc


def _fmt(x):
    return "undefined" if x is None else f"{x:.12g}"


def cmd_spectrum(args) -> int:
    v = _point_values(args)
    p = _model(v)
    spec = auto_converge(p, v["solver"]) if args.auto_converge else diagonalize(p, v["solver"], vectors=False)
    k = min(v["levels"], len(spec.energies))
    for i, e in enumerate(spec.energies[:k]):
        print(f"{i}\t{e:.12g}")
    if args.out:
        _write_text(args.out, lambda fh: _spectrum_csv(fh, spec.energies[:k]))
    return 0


def _spectrum_csv(fh, energies):
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(["index", "energy"])
    for i, e in enumerate(energies):
        w.writerow([i, format(float(e), ".17g")])


def _write_text(path, writer):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer(fh)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def cmd_cycle(args) -> int:
    v = _point_values(args)
    try:
        proto = protocol_for(v)
    except ValueError as exc:
        raise ConfigError("params", str(exc)) from exc
    spectra = None
    if args.auto_converge:
        spectra = (auto_converge(proto.hot, v["solver"]), auto_converge(proto.cold, v["solver"]))
    res = run_cycle(proto, v["solver"], spectra=spectra)
    rows = {
        "regime": res.regime,
        "work": res.work,
        "q_hot": res.q_hot,
        "q_cold": res.q_cold,
        "eta": res.eta,
        "cop": res.cop,
        "carnot_eta": res.carnot_eta,
        "carnot_cop": res.carnot_cop,
    }
    for k, x in rows.items():
        print(f"{k}\t{x if isinstance(x, str) else _fmt(x)}")
    if args.out:
        payload = {k: (None if isinstance(x, float) and x == float("inf") else x) for k, x in rows.items()}
        payload["params"] = {k: v[k] for k in sorted(v)}
        _write_text(args.out, lambda fh: json.dump(payload, fh, indent=1, sort_keys=True))
    return 0


def cmd_correlate(args) -> int:
    v = _point_values(args)
    p = _model(v)
    temperature = v.get("temperature", v["t_cold"])
    rep = correlate(p, temperature, v["partition"])
    rows = {
        "g2_conventional": rep.g2_conventional,
        "g2_generalized": rep.g2_generalized,
        "negativity": rep.negativity,
        "mean_photon": rep.mean_photon,
        "temperature": temperature,
    }
    for k, x in rows.items():
        print(f"{k}\t{'undefined' if x != x else _fmt(x)}")
    print(f"flags\t{','.join(sorted(rep.flags))}")
    if args.out:
        payload = {k: (None if x != x else x) for k, x in rows.items()}
        payload["flags"] = sorted(rep.flags)
        _write_text(args.out, lambda fh: json.dump(payload, fh, indent=1, sort_keys=True))
    return 0


def _sweep_spec(args) -> SweepSpec:
    if not args.config:
        raise ConfigError("--config", "sweep commands need a config file")
    spec = load_sweep(args.config)
    d = dict(spec.__dict__)
    if args.threads:
        d["threads"] = args.threads
    if args.auto_converge:
        d["auto_converge"] = True
    if args.ntr is not None:
        d["fixed"] = {**spec.fixed, "n_tr": check_param("n_tr", args.ntr)}
    if args.set:
        d["fixed"] = {**d["fixed"], **_parse_set(args.set)}
    if args.out:
        d["csv"] = args.out
        d["json"] = str(Path(args.out).with_suffix(".json"))
    return SweepSpec(**d)


def _summary(grid):
    failed = [c for c in grid.cells if c["status"] != "ok"]
    print(f"cells\t{len(grid.cells)}", file=sys.stderr)
    if "regime" in grid.outputs:
        counts = Counter(c["regime"] for c in grid.cells if c["status"] == "ok")
        for name in REGIME_CHARS:
            if counts.get(name):
                print(f"{name}\t{counts[name]}", file=sys.stderr)
    if failed:
        print(f"failed\t{len(failed)} (first: {failed[0]['error']})", file=sys.stderr)


def cmd_sweep(args) -> int:
    spec = _sweep_spec(args)
    grid = run_sweep(spec)
    if spec.csv or spec.json:
        write_outputs(grid, spec.csv, spec.json)
    else:
        emit_csv(grid, "/dev/stdout")
    _summary(grid)
    return 0


def cmd_phase_diagram(args) -> int:
    spec = _sweep_spec(args)
    if len(spec.axes) != 2:
        raise ConfigError("axes", "phase-diagram needs exactly two axes")
    if "regime" not in spec.outputs:
        spec = SweepSpec(**{**spec.__dict__, "outputs": ("regime",) + tuple(spec.outputs)})
    grid = run_sweep(spec)
    if spec.csv or spec.json:
        write_outputs(grid, spec.csv, spec.json)
    a0, a1 = spec.axes
    print(f"# rows: {a0.name}, columns: {a1.name} ({a1.values[0]:g} .. {a1.values[-1]:g})")
    n1 = len(a1.values)
    for i, x in enumerate(a0.values):
        row = grid.cells[i * n1:(i + 1) * n1]
        chars = "".join(REGIME_CHARS.get(c["regime"], "?") if c["status"] == "ok" else "x" for c in row)
        print(f"{x:8.4g} {chars}")
    print("# E engine, R refrigerator, H heater, A accelerator, . degenerate, x failed")
    _summary(grid)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dicke-otto", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "spectrum": (cmd_spectrum, "print the lowest eigenvalues"),
        "cycle": (cmd_cycle, "evaluate one Otto cycle"),
        "sweep": (cmd_sweep, "run a parameter grid from a config file"),
        "correlate": (cmd_correlate, "thermal g2, G2 and negativity"),
        "phase-diagram": (cmd_phase_diagram, "two-axis regime map"),
    }
    for name, (fn, text) in commands.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--threads", type=int, default=None, help="worker threads for sweeps")
        sp.add_argument("--ntr", type=int, default=None, help="bosonic truncation number")
        sp.add_argument("--auto-converge", action="store_true", help="double n_tr until levels converge")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a parameter")
        sp.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigensolverError, DimensionError, ThermodynamicsError, DensityMatrixError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
