"""Command-line front end: ``timebin-tomo {table,export-povm,simulate,reconstruct}``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .datafiles import (
    MAJORANA_COLUMNS,
    POINT_COLUMNS,
    RESULT_COLUMNS,
    DataFileError,
    data_header_path,
    read_data,
    read_json,
    write_csv,
    write_data,
    write_json,
    write_povm_json,
)
from .manifest import ConfigError, RunManifest
from .povm import build_povm, povm_hash
from .simulate import run_ensemble
from .states import bloch_coordinates, majorana_pair
from .tomography import StateOutcome, reconstruct_counts, run_reconstructions, summarize

log = logging.getLogger("timebin_tomo")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2

_FLAG_TO_FIELD = {
    "system": "system",
    "length_m": "lengths_m",
    "jitter_ps": "jitters_ps",
    "photons": "photons",
    "operators": "operators",
    "resolution": "resolution",
    "phases": "phases",
    "seed": "seed",
    "out": "out_dir",
    "workers": "workers",
    "threshold": "threshold_fraction",
}


def cell_tag(length: float, sigma_d: float) -> str:
    return f"L{length:g}_sd{sigma_d:g}"


def manifest_from_args(args) -> RunManifest:
    base = RunManifest.read(args.config).to_dict() if args.config else RunManifest().to_dict()
    for flag, key in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            base[key] = value
    if getattr(args, "method", None) is not None:
        base["methods"] = ["ls", "mle"] if args.method == "both" else [args.method]
    return RunManifest.from_dict(base)


def _result_rows(outcomes, methods):
    for o in outcomes:
        for m in methods:
            r = o.results[m]
            yield (o.state_id, m, o.fidelities[m], r.objective_value, r.iterations, r.converged)


def _summary_rows(manifest, length, sigma_d, outcomes, status="ok"):
    rows = []
    for m in manifest.methods:
        row = {"L": length, "sigma_d": sigma_d, "method": m, "seed": manifest.seed,
               "operators": manifest.operator_count, "status": status}
        if outcomes is None:
            row.update(mean=None, std=None, n_states=0, failed=None)
        else:
            st = summarize(outcomes, m)
            row.update(mean=st.mean, std=st.std_dev, n_states=st.count, failed=st.failed)
        rows.append(row)
    return rows


def _write_summary(out: Path, rows) -> None:
    write_json(out / "summary.json", rows)
    cols = ["L", "sigma_d", "method", "mean", "std", "n_states", "failed", "operators", "seed", "status"]
    write_csv(out / "summary.csv", cols, ([r[c] if r[c] is not None else "nan" for c in cols] for r in rows))


def cmd_table(manifest: RunManifest) -> int:
    out = Path(manifest.out_dir)
    manifest.write(out)
    states = manifest.states()
    rows, failed = [], False
    for length, sigma_d in manifest.cells():
        t0 = time.perf_counter()
        try:
            config = manifest.experiment(length, sigma_d)
            outcomes = run_reconstructions(states, config, manifest.methods, manifest.workers)
        except ConfigError:
            raise
        except Exception as exc:  # a failing cell must not abort the table
            log.error("cell L=%g sigma_d=%g failed: %s", length, sigma_d, exc)
            rows.extend(_summary_rows(manifest, length, sigma_d, None, status=f"failed: {exc}"))
            failed = True
            continue
        write_csv(out / f"results_{cell_tag(length, sigma_d)}.csv", RESULT_COLUMNS,
                  _result_rows(outcomes, manifest.methods))
        cell_rows = _summary_rows(manifest, length, sigma_d, outcomes)
        rows.extend(cell_rows)
        for r in cell_rows:
            log.info("L=%g m sigma_d=%g ps %s: %.4f (%.4f) [%.1fs]", length, sigma_d,
                     r["method"], r["mean"], r["std"], time.perf_counter() - t0)
        _write_summary(out, rows)
    _write_summary(out, rows)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_export_povm(manifest: RunManifest) -> int:
    out = Path(manifest.out_dir)
    manifest.write(out)
    done_majorana = set()
    for length, sigma_d in manifest.cells():
        config = manifest.experiment(length, sigma_d)
        tag = cell_tag(length, sigma_d)
        write_povm_json(out / f"povm_{tag}.json", config.povm)
        single = config.single_povm
        if manifest.dim == 2:
            rows = []
            for op in single:
                p = bloch_coordinates(op.matrix / op.trace)
                rows.append((op.time, op.trace, p.x, p.y, p.z))
            write_csv(out / f"points_{tag}.csv", POINT_COLUMNS, rows)
        elif length not in done_majorana:
            # Majorana pairs describe pure (jitter-free) operators only
            done_majorana.add(length)
            rows = []
            for t in config.grid.instants:
                pair = majorana_pair(t, config.pulse, config.fiber)
                for k, p in enumerate(pair.points):
                    rows.append((pair.time, pair.weight, p.x, p.y, p.z, k))
            write_csv(out / f"majorana_L{length:g}.csv", MAJORANA_COLUMNS, rows)
    return EXIT_OK


def cmd_simulate(manifest: RunManifest) -> int:
    out = Path(manifest.out_dir)
    manifest.write(out)
    states = manifest.states()
    for length, sigma_d in manifest.cells():
        config = manifest.experiment(length, sigma_d)
        records = run_ensemble(states, config, manifest.workers)
        header = {
            "manifest": manifest.to_dict(),
            "cell": {"length_m": length, "sigma_d_ps": sigma_d},
            "povm_hash": povm_hash(config.povm),
            "n_states": len(states),
            "n_operators": len(config.povm),
        }
        write_data(out / f"data_{cell_tag(length, sigma_d)}.csv", header, records, config.povm)
    return EXIT_OK


def cmd_reconstruct(data_path: Path, out_dir: Path | None = None, methods=None) -> int:
    header = read_json(data_header_path(data_path))
    try:
        manifest = RunManifest.from_dict(header["manifest"])
        length = float(header["cell"]["length_m"])
        sigma_d = float(header["cell"]["sigma_d_ps"])
        expected_hash = header["povm_hash"]
        n_states = int(header["n_states"])
    except (KeyError, TypeError) as exc:
        raise DataFileError(f"data header is missing {exc}") from exc
    if methods:
        manifest.methods = list(methods)
        manifest.validate()
    config = manifest.experiment(length, sigma_d)
    if povm_hash(config.povm) != expected_hash:
        raise DataFileError("POVM hash mismatch: data was produced with a different measurement setup")
    counts = read_data(data_path, len(config.povm))
    states = manifest.states()
    if sorted(counts) != list(range(n_states)) or len(states) != n_states:
        raise DataFileError(f"{data_path}: expected states 0..{n_states - 1}, found {len(counts)}")
    outcomes: list[StateOutcome] = [
        reconstruct_counts(states[i], counts[i], config.povm, config.photons, i, manifest.methods)
        for i in range(n_states)
    ]
    out = Path(out_dir) if out_dir else Path(data_path).parent
    tag = cell_tag(length, sigma_d)
    write_csv(out / f"results_{tag}.csv", RESULT_COLUMNS, _result_rows(outcomes, manifest.methods))
    write_json(out / f"summary_{tag}.json", _summary_rows(manifest, length, sigma_d, outcomes))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="timebin-tomo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--config", type=Path, help="manifest JSON to start from")
        p.add_argument("--system", choices=["qubit", "qutrit", "entangled"])
        p.add_argument("--length-m", type=float, nargs="+")
        p.add_argument("--jitter-ps", type=float, nargs="+")
        p.add_argument("--photons", type=int)
        p.add_argument("--operators", type=int)
        p.add_argument("--resolution", type=int, help="grid points per state parameter")
        p.add_argument("--phases", type=int, help="number of Phi+ phases (entangled)")
        p.add_argument("--method", choices=["ls", "mle", "both"])
        p.add_argument("--seed", type=int)
        p.add_argument("--threshold", type=float, help="fraction of max mu bounding the time grid")
        p.add_argument("--out", type=str)
        p.add_argument("--workers", type=int)

    for name, help_ in [("table", "reproduce an average-fidelity table"),
                        ("export-povm", "write POVM operators and Bloch/Majorana points"),
                        ("simulate", "write synthetic count data")]:
        add_run_flags(sub.add_parser(name, help=help_))
    rec = sub.add_parser("reconstruct", help="reconstruct states from a simulated data file")
    rec.add_argument("data", type=Path)
    rec.add_argument("--out", type=Path)
    rec.add_argument("--method", choices=["ls", "mle", "both"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    np.seterr(over="ignore", under="ignore")
    try:
        if args.command == "reconstruct":
            methods = None
            if args.method:
                methods = ["ls", "mle"] if args.method == "both" else [args.method]
            return cmd_reconstruct(args.data, args.out, methods)
        manifest = manifest_from_args(args)
        if args.command == "table":
            return cmd_table(manifest)
        if args.command == "export-povm":
            return cmd_export_povm(manifest)
        return cmd_simulate(manifest)
    except (ConfigError, DataFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
