"""Command-line entry point: ``domainwall <command> ...``.

Every command reads its inputs from files, writes its outputs to files and
leaves a ``<output>.manifest.json`` beside the first output recording the
command line, resolved options, seeds, input and output digests and the
package version.  ``domainwall replay MANIFEST`` re-runs a manifest and
checks that the outputs come out bit-identical.

Exit codes: 0 success, 2 usage, 3 data, 4 resource, 5 I/O.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ._version import __version__
from .dof import scan_critical_degree, scan_table
from .encoders import (
    DOMAIN_WALL,
    K_HOT,
    ONE_HOT,
    convert_one_hot_to_domain_wall,
    decode,
    encode,
    encode_k_hot,
    k_hot_map,
)
from .errors import DomainWallError, ParameterError, ResourceError
from .freeze import (
    T_PHYSICAL_GHZ,
    ExperimentRecord,
    ScheduleTable,
    ThermalModel,
    chain_strength_heuristic,
    fit_temperature,
    load_records,
    rescale_and_extract,
)
from .io import load_qubo, qubo_to_dict
from .problems import (
    AssignmentSpec,
    TspSpec,
    brute_force_minimize,
    brute_force_qubo,
    load_problem,
    problem_to_dict,
)
from .sampler import RNG_ALGORITHM, feasible_fraction_curve

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RESOURCE, EXIT_IO = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


# -- small helpers ------------------------------------------------------------


def _count(text: str) -> int:
    """Parse a sample count, accepting scientific notation such as ``1e6``."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v) or v < 1 or v != int(v):
        raise argparse.ArgumentTypeError(f"expected a positive integer count, got {text!r}")
    return int(v)


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else _fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _threads(n: int | None) -> int:
    return n if n else (os.cpu_count() or 1)


class _Run:
    """Collects outputs of one command and writes them with their manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.inputs: dict[str, str] = {}
        self.outputs: list[tuple[Path, str]] = []

    def read(self, path) -> Path:
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"no such file: {p}")
        self.inputs[str(p)] = _sha256(p)
        return p

    def write(self, path, text: str) -> None:
        self.outputs.append((Path(path), text))

    def commit(self) -> Path | None:
        if not self.outputs:
            return None
        for p, text in self.outputs:
            if p.parent and not p.parent.exists():
                p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text)
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "command": self.argv,
            "subcommand": self.args.command,
            "config": config,
            "seeds": {k: config[k] for k in ("seed",) if k in config},
            "rng": RNG_ALGORITHM,
            "inputs": self.inputs,
            "outputs": {str(p): _sha256(p) for p, _ in self.outputs},
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "cwd": os.getcwd(),
        }
        mpath = Path(str(self.outputs[0][0]) + ".manifest.json")
        mpath.write_text(_dump_json(manifest))
        return mpath


# -- commands -------------------------------------------------------------------


def cmd_problem_gen(args, run: _Run) -> None:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    m = args.m
    if args.type == "assignment":
        spec = AssignmentSpec(m, kappa=args.kappa)
    elif args.type == "qap":
        f = _random_symmetric(rng, m, 0, args.max_weight)
        d = _random_symmetric(rng, m, 0, args.max_weight)
        spec = AssignmentSpec(m, f, d, args.kappa)
    else:
        d = _random_symmetric(rng, m, 1, args.max_weight)
        base = rng.integers(1, args.max_weight + 1, size=m).astype(float) if args.base else None
        spec = TspSpec(m, d, base, args.kappa)
    run.write(args.out, _dump_json(problem_to_dict(spec)))
    print(f"wrote {args.type} problem with m={m} to {args.out}")


def _random_symmetric(rng, m, lo, hi) -> np.ndarray:
    a = rng.integers(lo, hi + 1, size=(m, m)).astype(float)
    a = np.triu(a, 1)
    return a + a.T


def cmd_encode(args, run: _Run) -> None:
    if args.scheme == K_HOT:
        m = args.m
        if m is None:
            if args.problem is None:
                raise UsageError("k-hot needs --m or --problem")
            m = load_problem(run.read(args.problem)).size
        if args.k is None or not 1 <= args.k <= m - 1:
            raise UsageError(f"--k must lie in [1, {m - 1}] for m={m}")
        q, emap = encode_k_hot(m, args.k, args.kappa), k_hot_map(m, args.k, args.kappa)
    else:
        if args.problem is None:
            raise UsageError(f"--problem is required for {args.scheme}")
        d = load_problem(run.read(args.problem))
        order = None
        if args.value_order:
            order = [int(v) for v in args.value_order.split(",")]
        q, emap = encode(d, args.scheme, args.kappa, order)
    out = args.out or f"{Path(args.problem or 'khot').stem}_{args.scheme}.qubo.json"
    run.write(out, _dump_json(qubo_to_dict(q, emap)))
    print(f"{args.scheme}: {q.num_bits} bits, {len(q.quadratic)} couplers -> {out}")


def cmd_convert(args, run: _Run) -> None:
    q, emap = load_qubo(run.read(args.qubo))
    order = [int(v) for v in args.value_order.split(",")] if args.value_order else None
    q2, emap2 = convert_one_hot_to_domain_wall(q, emap, args.kappa_dw, order)
    out = args.out or f"{Path(args.qubo).stem}_domain-wall.qubo.json"
    run.write(out, _dump_json(qubo_to_dict(q2, emap2)))
    print(f"converted {q.num_bits} one-hot bits to {q2.num_bits} domain-wall bits -> {out}")


def cmd_dof(args, run: _Run) -> None:
    if args.m_max < 4:
        raise UsageError("--m-max must be at least 4")
    if args.m_max > 1000:
        raise UsageError("--m-max must be at most 1000")
    outdir = Path(args.out_dir)
    table = scan_table(args.m_max, args.even_only)
    run.write(
        outdir / "dof_table.csv",
        _csv_text(
            ["m", "n_var", "missing_dof", "n_aux", "d_crit"],
            ([r.m, r.n_var, r.missing_dof, r.n_aux, float(r.d_crit)] for r in table),
        ),
    )
    summary = scan_critical_degree(args.m_max, args.even_only)
    run.write(
        outdir / "dof_summary.csv",
        _csv_text(["m", "max_d_crit", "argmax_n_var"], ([m, float(dc), n] for m, n, dc in summary)),
    )
    best = max(dc for _, _, dc in summary)
    print(f"{len(table)} rows; largest d_crit {float(best):.6f} (sqrt 2 = {math.sqrt(2):.6f})")


def cmd_sample(args, run: _Run) -> None:
    d = load_problem(run.read(args.problem))
    q, emap = encode(d, args.scheme, args.kappa)
    temps = sorted(set(args.T))
    stats = feasible_fraction_curve(q, emap, d, temps, args.n, args.seed, _threads(args.threads))
    run.write(
        args.out,
        _csv_text(
            ["T", "p", "se", "mean_excess_energy"],
            ([s.temperature, s.feasible_fraction, s.standard_error, s.mean_excess_energy] for s in stats),
        ),
    )
    if args.trace:
        rows = []
        for s in stats:
            rows.extend([s.temperature, int(c), t] for c, t in zip(s.checkpoints, s.trace))
        run.write(args.trace, _csv_text(["T", "step", "running_mean_excess_energy"], rows))
    for s in stats:
        print(f"T={s.temperature:g} p={s.feasible_fraction:.6f} se={s.standard_error:.2g}")


_FIT_HEADER = [
    "m", "scheme", "T_qubo", "T_coup", "B_freeze_GHz", "s_freeze", "A_freeze_GHz",
    "ci_low_T_qubo", "ci_high_T_qubo", "ci_low_T_coup", "ci_high_T_coup",
    "ci_low_B_freeze_GHz", "ci_high_B_freeze_GHz", "ci_low_s_freeze", "ci_high_s_freeze",
    "ci_low_A_freeze_GHz", "ci_high_A_freeze_GHz",
    "chain_strength", "energy_scale", "feasible_count", "total_anneals", "note",
]


def cmd_fit(args, run: _Run) -> None:
    records = load_records(run.read(args.records)) if args.records else _packaged_records(run)
    schedule = ScheduleTable.from_csv(run.read(args.schedule)) if args.schedule else _packaged_schedule(run)
    if args.energy_scale == "max-coef":
        scale = None
    elif args.energy_scale == "kappa":
        scale = 1.0
    else:
        try:
            scale = _positive(args.energy_scale)
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError("--energy-scale must be max-coef, kappa or a positive number") from None

    def one(rec: ExperimentRecord):
        model = ThermalModel.for_assignment(
            rec.m, rec.scheme, num_samples=args.n, seed=args.seed, energy_scale=scale,
            cache_dir=args.cache_dir,
        )
        cs = rec.chain_strength or chain_strength_heuristic(model.q)
        est = fit_temperature(rec, model, args.iterations, args.t_max)
        est = rescale_and_extract(est, cs, schedule, args.T_physical, strict=False)
        notes = [est.metadata[k] for k in ("note", "extrapolation") if k in est.metadata]
        if "clipped" in est.metadata:
            notes.append("CI clipped to schedule: " + ", ".join(est.metadata["clipped"]))
        row = [
            rec.m, rec.scheme, est.T_qubo, est.T_coup, est.B_freeze, est.s_freeze, est.A_freeze,
        ]
        for f in ("T_qubo", "T_coup", "B_freeze", "s_freeze", "A_freeze"):
            row += [est.ci_low.get(f), est.ci_high.get(f)]
        row += [cs, model.energy_scale, rec.feasible_count, rec.total_anneals, "; ".join(notes)]
        return row

    with ThreadPoolExecutor(max_workers=_threads(args.threads)) as pool:
        rows = list(pool.map(one, records))
    run.write(args.out, _csv_text(_FIT_HEADER, rows))
    for r in rows:
        tq = "n/a" if r[2] is None else f"{r[2]:.4f}"
        tc = "n/a" if r[3] is None else f"{r[3]:.4f}"
        print(f"m={r[0]} {r[1]}: T_qubo={tq} T_coup={tc}")


def _packaged_records(run: _Run):
    return load_records(run.read(Path(__file__).with_name("data") / "records_illustrative.csv"))


def _packaged_schedule(run: _Run):
    return ScheduleTable.from_csv(run.read(Path(__file__).with_name("data") / "schedule_illustrative.csv"))


def cmd_solve_brute(args, run: _Run) -> None:
    if (args.problem is None) == (args.qubo is None):
        raise UsageError("give exactly one of --problem or --qubo")
    if args.problem is not None:
        d = load_problem(run.read(args.problem))
        emin, mins = brute_force_minimize(d)
        result = {"kind": "dqm", "min_energy": emin, "num_minimizers": len(mins),
                  "minimizers": mins.tolist()}
    else:
        q, emap = load_qubo(run.read(args.qubo))
        emin, mins = brute_force_qubo(q)
        result = {"kind": "qubo", "min_energy": emin, "num_minimizers": len(mins),
                  "minimizers": mins.tolist()}
        if emap is not None:
            result["decoded"] = [
                None if not (r := decode(b, emap)).feasible else list(r.values) for b in mins
            ]
    print(f"min_energy={emin!r} minimizers={len(mins)}")
    if args.out:
        run.write(args.out, _dump_json(result))


def cmd_replay(args, run: _Run) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    # relative paths in the manifest are relative to the directory it was made in
    here = os.getcwd()
    os.chdir(manifest.get("cwd", here))
    try:
        for path, digest in manifest["inputs"].items():
            if not Path(path).is_file() or _sha256(Path(path)) != digest:
                print(f"input changed or missing: {path}", file=sys.stderr)
                return EXIT_DATA
        code = main(manifest["command"])
        if code != EXIT_OK:
            return code
        bad = [p for p, h in manifest["outputs"].items() if _sha256(Path(p)) != h]
    finally:
        os.chdir(here)
    for p in bad:
        print(f"output differs: {p}", file=sys.stderr)
    if bad:
        return EXIT_DATA
    print(f"reproduced {len(manifest['outputs'])} output(s) bit-identically")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="domainwall",
        description="Compile discrete quadratic models to QUBOs and analyse their thermal behaviour.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("problem-gen", help="write a benchmark problem file")
    p.add_argument("--type", choices=["assignment", "qap", "tsp"], required=True)
    p.add_argument("--m", type=int, required=True, help="problem size")
    p.add_argument("--seed", type=int, default=0, help="seed for random weights")
    p.add_argument("--max-weight", type=int, default=9, help="largest random integer weight")
    p.add_argument("--base", action="store_true", help="TSP: add a depot with random distances")
    p.add_argument("--kappa", type=_positive, default=None, help="constraint strength (default: automatic)")
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=cmd_problem_gen)

    p = sub.add_parser("encode", help="compile a problem to a QUBO")
    p.add_argument("--problem", help="problem or DQM JSON file")
    p.add_argument("--scheme", choices=[ONE_HOT, DOMAIN_WALL, K_HOT], required=True)
    p.add_argument("--kappa", type=_positive, default=1.0, help="constraint strength")
    p.add_argument("--k", type=int, default=None, help="k-hot: number of set bits")
    p.add_argument("--m", type=int, default=None, help="k-hot: block size when no problem is given")
    p.add_argument("--value-order", default=None, help="domain-wall chain order, e.g. 2,0,1")
    p.add_argument("--out", default=None, help="output QUBO JSON path")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("convert", help="re-encode a one-hot QUBO with domain walls")
    p.add_argument("--from", dest="source", choices=[ONE_HOT], default=ONE_HOT)
    p.add_argument("--qubo", required=True, help="one-hot QUBO JSON")
    p.add_argument("--kappa-dw", type=_positive, default=1.0, help="domain-wall constraint strength")
    p.add_argument("--value-order", default=None, help="chain order applied to every variable")
    p.add_argument("--out", default=None, help="output QUBO JSON path")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("dof", help="degree-of-freedom scan of auxiliary-variable encodings")
    p.add_argument("--m-max", type=int, required=True, help="largest variable size (4..1000)")
    p.add_argument("--even-only", action="store_true", help="only even m")
    p.add_argument("--out-dir", default=".", help="directory for dof_table.csv and dof_summary.csv")
    p.set_defaults(func=cmd_dof)

    p = sub.add_parser("sample", help="Metropolis feasible fraction versus temperature")
    p.add_argument("--problem", required=True, help="problem or DQM JSON file")
    p.add_argument("--scheme", choices=[ONE_HOT, DOMAIN_WALL], required=True)
    p.add_argument("--kappa", type=_positive, default=1.0, help="constraint strength")
    p.add_argument("--T", type=_positive, nargs="+", required=True, help="temperatures (QUBO units)")
    p.add_argument("--n", type=_count, default=10**6, help="attempted updates per temperature")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--out", default="sample.csv", help="output CSV path")
    p.add_argument("--trace", default=None, help="optional CSV of running mean excess energy")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit freeze-out temperatures to experiment records")
    p.add_argument("--records", default=None, help="records CSV (default: packaged illustrative data)")
    p.add_argument("--schedule", default=None, help="schedule CSV (default: packaged illustrative table)")
    p.add_argument("--n", type=_count, default=10**6, help="Monte Carlo samples per bisection midpoint")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=15)
    p.add_argument("--t-max", type=_positive, default=2.5, help="upper end of the T_qubo bracket")
    p.add_argument("--T-physical", type=_positive, default=T_PHYSICAL_GHZ, help="device temperature in GHz")
    p.add_argument(
        "--energy-scale", default="max-coef",
        help="QUBO energy scale: max-coef (largest |coefficient|), kappa (1.0) or a number",
    )
    p.add_argument("--threads", type=int, default=None, help="records fitted concurrently")
    p.add_argument("--cache-dir", default=None, help="model cache (default: $DOMAINWALL_CACHE_DIR)")
    p.add_argument("--out", default="fit.csv", help="output CSV path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("solve-brute", help="exact minimum by enumeration")
    p.add_argument("--problem", default=None, help="problem or DQM JSON file")
    p.add_argument("--qubo", default=None, help="QUBO JSON")
    p.add_argument("--out", default=None, help="optional JSON with all minimizers")
    p.set_defaults(func=cmd_solve_brute)

    p = sub.add_parser("replay", help="re-run a manifest and verify identical outputs")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "iterations", 1) < 1:
        parser.print_usage(sys.stderr)
        print("error: --iterations must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    run = _Run(args, argv)
    try:
        code = args.func(args, run)
        run.commit()
        return EXIT_OK if code is None else code
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DomainWallError, json.JSONDecodeError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
