"""Command-line driver: ``python -m qreadout <command> [options]``.

Commands write plot-ready CSV series and JSON reports into ``--out`` (default
``$QREADOUT_OUT`` or ``./results``).  Every output embeds the resolved
configuration, seeds and package version; saving the ``config`` block of any
output and passing it back with ``--config`` reproduces the run.

Exit codes: 0 success, 2 configuration error, 3 training failure,
4 solver blow-up.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, burgers, dea, pipeline, sim
from .circuits import (AnsatzSpec, HadamardTestSpec, build_ansatz, build_hadamard_test,
                       build_o3_circuit, build_twin_circuit)
from .encoding import VelocityField, load_field, sine_field
from .stats import StructureFunctionCurve, classical_oracle, time_average

log = logging.getLogger("qreadout")

EXIT_OK, EXIT_CONFIG, EXIT_TRAINING, EXIT_BLOWUP = 0, 2, 3, 4

# (qubits, two-qubit gates, two-qubit layers) quoted for the n = 4, L = 8 circuits
METRIC_REFERENCES = {
    "twin": ((8, 24, 8), "four-power twin circuit", True),
    "hadamard_cat": ((6, 39, 24), "adjusted Hadamard test after routing/optimisation", False),
    "o3_cat": ((10, 51, 24), "cubic-sum circuit after routing/optimisation", False),
}
FAMILIES = ("ansatz", "twin", "hadamard_single", "hadamard_cat", "o3_single", "o3_cat")


class TrainingFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- output helpers

def provenance(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "out")}
    return {"version": __version__, "config": cfg, "seed": args.seed}


def write_json(path: Path, doc, args):
    doc = {"provenance": provenance(args), **doc}
    path.write_text(json.dumps(doc, indent=1, default=_jsonable) + "\n")
    log.info("wrote %s", path)


def write_csv(path: Path, text: str, args):
    prov = json.dumps(provenance(args), sort_keys=True, default=_jsonable)
    path.write_text(f"# {prov}\n{text}")
    log.info("wrote %s", path)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"{type(x).__name__} is not JSON serialisable")


def out_dir(args) -> Path:
    p = Path(args.out or os.environ.get("QREADOUT_OUT") or "results")
    p.mkdir(parents=True, exist_ok=True)
    return p


def readout_config(args) -> pipeline.ReadoutConfig:
    return pipeline.ReadoutConfig(
        mode="both" if args.mode == "shots" else "exact", shots=args.shots,
        precision=args.precision, seed=args.seed, baseline=args.baseline,
        encode=args.encode, control_mode=args.control_mode, workers=args.workers)


def _print_moments(doc, title):
    print(title)
    keys = ("mean", "m2", "m3", "m4")
    print(f"  {'':12s}" + "".join(f"{k:>14s}" for k in keys))
    for row in ("reference", "statevector"):
        print(f"  {row:12s}" + "".join(f"{doc[row][k]:14.6f}" for k in keys))
    if "shots" in doc:
        s = doc["shots"]
        print(f"  {'shots':12s}" + "".join(f"{s['values'][k]:14.6f}" for k in keys))
        print(f"  {'  sigma':12s}" + "".join(f"{s['sigma'][k]:14.6f}" for k in keys))
        print(f"  {'  N_sigma':12s}" + "".join(f"{s['n_sigma'][k]:14.2f}" for k in keys))


def _check_training(doc, label):
    enc = doc.get("encoding")
    if enc is not None and not enc["converged"]:
        raise TrainingFailure(f"{label}: training stopped at cosine distance {enc['cost']:.3e}")


# ---------------------------------------------------------------- commands

def cmd_sine(args) -> int:
    field = sine_field(args.n)
    doc = pipeline.field_report(field, readout_config(args))
    out = out_dir(args)
    write_json(out / f"sine_n{args.n}_report.json", doc, args)
    write_csv(out / f"sine_n{args.n}_curves.csv", pipeline.curves_csv(doc["curves"]), args)
    _print_moments(doc, f"sine field, n = {args.n}")
    _check_training(doc, "sine")
    return EXIT_OK


def burgers_config(args) -> burgers.BurgersConfig:
    return burgers.BurgersConfig(
        N=args.N, x_begin=args.x_begin, x_end=args.x_end, dt=args.dt, steps=args.steps,
        nu=args.nu, D0=args.D0, beta=args.beta, seed=args.seed,
        noise_scaling=args.noise_scaling, forcing_wavenumber=args.forcing_wavenumber,
        dealias=args.dealias, record_every=args.record_every,
        snapshot_fractions=tuple(args.snapshot_fractions))


def moment_series(traj: burgers.Trajectory) -> str:
    grad = traj.gradient_max()
    lines = ["t,energy,mean,m2,m3,m4,max_abs_dudx"]
    for t, u, e, g in zip(traj.times, traj.fields, traj.energy, grad):
        d = u - u.mean()
        vals = (t, e, u.mean(), np.mean(d**2), np.mean(d**3), np.mean(d**4), g)
        lines.append(",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def cmd_burgers(args) -> int:
    cfg = burgers_config(args)
    initial = None
    if args.initial == "sine":
        initial = np.sin(2 * np.pi * (cfg.x - cfg.x_begin) / (cfg.x_end - cfg.x_begin))
    traj = burgers.simulate(cfg, initial=initial)
    out = out_dir(args)
    index = burgers.write_trajectory(traj, out / "snapshots")
    write_csv(out / "moments_series.csv", moment_series(traj), args)
    if not args.readout:
        write_json(out / "burgers_summary.json", {"index": index}, args)
        return EXIT_OK

    rcfg = readout_config(args)
    reports, curves = [], {k: {2: [], 4: []} for k in ("reference", "statevector", "shots")}
    if not traj.snapshots:
        raise ValueError("no snapshot fractions given")
    for snap in traj.snapshots:
        # independent shot streams per snapshot
        seed = int(np.random.SeedSequence([args.seed, snap.step]).generate_state(1)[0])
        doc = pipeline.field_report(VelocityField(snap.values, cfg.dx), replace(rcfg, seed=seed))
        doc.update(t=snap.t, step=snap.step, shot_seed=seed)
        reports.append(doc)
        write_json(out / f"readout_step{snap.step:07d}.json", doc, args)
        c = doc["curves"]
        for order in (2, 4):
            for row in curves:
                key = f"S{order}_{row}"
                if key in c:
                    curves[row][order].append(StructureFunctionCurve(
                        order, c["r"], c[key], c.get(key + "_sigma"), snap.t))
        _print_moments(doc, f"snapshot t = {snap.t:g} (|u| = {doc['norm']:.4f})")
    write_csv(out / "structure_functions.csv", _sf_table(reports, curves), args)
    write_json(out / "burgers_summary.json",
               {"index": index, "moments": [{k: d[k] for k in ("t", "reference", "statevector")}
                                            | ({"shots": d["shots"]} if "shots" in d else {})
                                            for d in reports]}, args)
    for i, d in enumerate(reports):
        _check_training(d, f"snapshot {i}")
    return EXIT_OK


def _sf_table(reports, curves) -> str:
    r = reports[0]["curves"]["r"]
    cols = {"r": r}
    for i, d in enumerate(reports):
        for key, vals in d["curves"].items():
            if key != "r":
                cols[f"{key}_snap{i}"] = vals
    for row, by_order in curves.items():
        for order, cs in by_order.items():
            if cs:
                avg = time_average(cs)
                cols[f"S{order}_{row}_time_avg"] = avg.values.tolist()
                if row == "shots":
                    cols[f"S{order}_{row}_time_avg_sigma"] = avg.sigmas.tolist()
    return pipeline.curves_csv(cols)


def cmd_dea(args) -> int:
    sweep = dea.expressivity_sweep(args.variant, args.n, args.L_max, args.samples, args.seed,
                                   args.tolerance)
    out = out_dir(args)
    stem = f"dea_{args.variant}_n{args.n}"
    write_csv(out / f"{stem}.csv", sweep.to_csv(), args)
    write_json(out / f"{stem}.json", sweep.to_dict(), args)
    print(f"{args.variant} n={args.n}: ranks {[r[1] for r in sweep.rows]}, plateau {sweep.plateau}")
    if sweep.note:
        print("note:", sweep.note)
    return EXIT_OK


def family_circuit(family: str, L: int, n: int = 4) -> sim.Circuit:
    spec = AnsatzSpec("adjusted", n, L)
    if family == "ansatz":
        return build_ansatz(spec)
    if family == "twin":
        return build_twin_circuit(spec)
    kind, mode = family.split("_")
    hspec = HadamardTestSpec(spec, "single_ancilla" if mode == "single" else "cat_state")
    build = build_hadamard_test if kind == "hadamard" else build_o3_circuit
    return build(hspec).circuit


def metrics_table(families, L=8, n=4) -> list[dict]:
    rows = []
    for fam in families:
        if fam not in FAMILIES:
            raise ValueError(f"unknown circuit family {fam!r}")
        c = family_circuit(fam, L, n)
        a, d = sim.metrics(c), sim.metrics(c, decomposed=True)
        row = {"family": fam, "n": n, "L": L,
               "abstract": [a.qubit_count, a.two_qubit_gate_count, a.two_qubit_layer_count],
               "decomposed": [d.qubit_count, d.two_qubit_gate_count, d.two_qubit_layer_count]}
        if fam in METRIC_REFERENCES and (n, L) == (4, 8):
            ref, what, asserted = METRIC_REFERENCES[fam]
            row.update(reference=list(ref), reference_note=what, exact_match_expected=asserted,
                       delta=[x - y for x, y in zip(row["abstract"], ref)])
        rows.append(row)
    return rows


def cmd_metrics(args) -> int:
    rows = metrics_table(args.families, args.L, args.n)
    write_json(out_dir(args) / "metrics.json", {"rows": rows}, args)
    print(f"{'family':16s}{'abstract':>16s}{'decomposed':>16s}{'reference':>16s}{'delta':>16s}")
    for r in rows:
        fmt = lambda v: "(" + ", ".join(map(str, v)) + ")" if v else "-"
        print(f"{r['family']:16s}{fmt(r['abstract']):>16s}{fmt(r['decomposed']):>16s}"
              f"{fmt(r.get('reference')):>16s}{fmt(r.get('delta')):>16s}")
    for r in rows:
        if "reference" in r:
            kind = "must match" if r["exact_match_expected"] else "comparison only"
            print(f"  {r['family']}: reference is the {r['reference_note']} ({kind})")
    return EXIT_OK


def cmd_oracle(args) -> int:
    field = load_field(args.field)
    moments, curves = classical_oracle(field, full=args.full)
    doc = {"field": str(args.field), "N": field.N, "norm": field.norm, "moments": moments.to_dict()}
    out = out_dir(args)
    stem = Path(args.field).stem
    write_json(out / f"oracle_{stem}.json", doc, args)
    write_csv(out / f"oracle_{stem}_curves.csv",
              pipeline.curves_csv({"r": curves[2].r.tolist(), "S2": curves[2].values.tolist(),
                                   "S4": curves[4].values.tolist()}), args)
    print("mean %.6f  m2 %.6f  m3 %.6f  m4 %.6f" % moments.as_tuple())
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _global_options(p, suppress=False):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--out", default=d(None), help="output directory")
    p.add_argument("--config", default=d(None), help="JSON file of option defaults")
    p.add_argument("--mode", choices=("exact", "shots"), default=d("exact"))
    p.add_argument("--shots", type=int, default=d(None),
                   help="shots per observable (default: solved from --precision)")
    p.add_argument("--precision", type=float, default=d(0.05),
                   help="target standard error per observable")
    p.add_argument("--baseline", choices=("classical", "statevector"), default=d("classical"))
    p.add_argument("--workers", type=int, default=d(1))
    p.add_argument("--log-level", default=d("WARNING"))


def _readout_options(p):
    p.add_argument("--encode", choices=("train", "inject"), default="train")
    p.add_argument("--control-mode", choices=("single_ancilla", "cat_state"), default="single_ancilla")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qreadout", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    _global_options(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sine", help="moments and structure functions of the sine test signal")
    _global_options(p, suppress=True)
    p.add_argument("--n", type=int, default=4, help="qubits (N = 2**n points)")
    _readout_options(p)
    p.set_defaults(func=cmd_sine)

    p = sub.add_parser("burgers", help="forced Burgers run plus snapshot readout")
    _global_options(p, suppress=True)
    dflt = burgers.BurgersConfig()
    for name in ("N", "steps", "record_every"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, default=getattr(dflt, name))
    for name in ("x_begin", "x_end", "dt", "nu", "D0", "beta"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=getattr(dflt, name))
    p.add_argument("--noise-scaling", choices=("inv_sqrt_dt", "none"), default=dflt.noise_scaling)
    p.add_argument("--forcing-wavenumber", choices=("mode", "physical"),
                   default=dflt.forcing_wavenumber)
    p.add_argument("--dealias", action=argparse.BooleanOptionalAction, default=dflt.dealias)
    p.add_argument("--snapshot-fractions", type=float, nargs="+",
                   default=list(dflt.snapshot_fractions))
    p.add_argument("--initial", choices=("zero", "sine"), default="zero")
    p.add_argument("--readout", action=argparse.BooleanOptionalAction, default=True)
    _readout_options(p)
    p.set_defaults(func=cmd_burgers)

    p = sub.add_parser("dea", help="Jacobian rank versus ansatz depth")
    _global_options(p, suppress=True)
    p.add_argument("--variant", choices=("adjusted", "brickwall"), default="adjusted")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--L-max", dest="L_max", type=int, default=12)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.set_defaults(func=cmd_dea)

    p = sub.add_parser("metrics", help="two-qubit gate and layer counts per circuit family")
    _global_options(p, suppress=True)
    p.add_argument("--families", nargs="*", default=list(FAMILIES), choices=FAMILIES)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--L", type=int, default=8)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("oracle", help="classical moments and structure functions of a field file")
    _global_options(p, suppress=True)
    p.add_argument("field", help="CSV (one value per line) or snapshot JSON")
    p.add_argument("--full", action="store_true", help="all shifts 0..N-1 instead of 0..N/2")
    p.set_defaults(func=cmd_oracle)
    return parser


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        cfg = json.loads(Path(known.config).read_text())
        cfg = cfg.get("provenance", {}).get("config", cfg)
        command = cfg.pop("command", None)
        sub = parser._subparsers._group_actions[0].choices
        if command and not any(a in sub for a in argv):
            argv.append(command)
        target = sub.get(command or next((a for a in argv if a in sub), ""))
        if target is None:
            raise ValueError("config file names no command and none was given")
        dests = {a.dest for p in (parser, target) for a in p._actions}
        unknown = set(cfg) - dests
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        parser.set_defaults(**cfg)
        target.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TrainingFailure as exc:
        print(f"training failure: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except burgers.BlowUpError as exc:
        print(f"solver blow-up at step {exc.step}", file=sys.stderr)
        return EXIT_BLOWUP
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
