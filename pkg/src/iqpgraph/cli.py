"""Command-line front end: gen-data, train, sample, eval, hpo, reproduce.

Option precedence is command-line flag, then ``--config`` JSON file, then
built-in default.  Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from iqpgraph import rng as rngmod
from iqpgraph.circuit import IqpCircuit, build_shallow_ansatz
from iqpgraph.fileio import read_graphs, write_csv, write_graphs, write_json
from iqpgraph.graphcodec import DatasetSpec, edge_count, generate, summarize
from iqpgraph.metrics import DEFAULT_BASELINE_TRIALS, build_report, degree_histogram
from iqpgraph.pipeline import VALIDATION_COLUMNS, hpo_and_select, reproduce, run_record
from iqpgraph.sampler import DEFAULT_SHOTS, MAX_SAMPLER_QUBITS, sample
from iqpgraph.trainer import TrainConfig, train

log = logging.getLogger("iqpgraph")

DEFAULTS = {
    "gen-data": {"family": "er", "nodes": 8, "density_class": "medium", "p": None, "count": None,
                 "seed": 0, "out": "dataset.jsonl"},
    "train": {"out_dir": "run", "learning_rate": 0.05, "epochs": 300, "mask_batch": 256, "z_batch": 2048,
              "init_multiplier": 1.0, "bandwidth_multiplier": 1.0, "sigma": None, "seed": 0,
              "biased": False},
    "sample": {"shots": DEFAULT_SHOTS, "seed": 0, "out": "samples.jsonl"},
    "eval": {"out": "report.json", "csv": None, "degree_hist": None,
             "baseline_trials": DEFAULT_BASELINE_TRIALS, "seed": 0},
    "hpo": {"out_dir": "hpo", "trials": 8, "folds": 3, "repeats": 2, "epochs": 200, "mask_batch": 256,
            "z_batch": 2048, "shots": DEFAULT_SHOTS, "baseline_trials": DEFAULT_BASELINE_TRIALS,
            "family": None, "seed": 0},
    "reproduce": {"out_dir": "reproduce", "nodes": 6, "trials": 4, "folds": 3, "repeats": 2, "epochs": 200,
                  "shots": DEFAULT_SHOTS, "baseline_trials": DEFAULT_BASELINE_TRIALS, "seed": 0,
                  "cells": None},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add(p, *flags, **kw):
    kw.setdefault("default", None)
    p.add_argument(*flags, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iqpgraph", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="JSON file with option values")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-data", help="generate an ER or bipartite dataset")
    _add(p, "--family", type=str.lower, choices=["er", "bp"])
    _add(p, "--nodes", type=int)
    _add(p, "--class", dest="density_class", choices=["sparse", "medium", "dense"])
    _add(p, "--p", type=float, help="edge probability (overrides the density class)")
    _add(p, "--count", type=int, help="number of unique graphs")
    _add(p, "--seed", type=int)
    _add(p, "--out", type=Path)

    p = sub.add_parser("train", help="train a shallow IQP circuit on a dataset")
    _add(p, "--data", type=Path, required=True)
    _add(p, "--out-dir", type=Path)
    _add(p, "--lr", dest="learning_rate", type=float)
    _add(p, "--epochs", type=int)
    _add(p, "--mask-batch", type=int)
    _add(p, "--z-batch", type=int)
    _add(p, "--init-mult", dest="init_multiplier", type=float)
    _add(p, "--bandwidth-mult", dest="bandwidth_multiplier", type=float)
    _add(p, "--sigma", type=float, help="fixed kernel bandwidth instead of the median heuristic")
    _add(p, "--seed", type=int)
    _add(p, "--biased", action="store_const", const=True, help="single-batch squared loss")

    p = sub.add_parser("sample", help="draw bitstrings from a trained circuit")
    _add(p, "--circuit", type=Path, required=True)
    _add(p, "--shots", type=int)
    _add(p, "--seed", type=int)
    _add(p, "--out", type=Path)

    p = sub.add_parser("eval", help="score samples against a reference dataset")
    _add(p, "--samples", type=Path, required=True)
    _add(p, "--data", type=Path, required=True)
    _add(p, "--out", type=Path)
    _add(p, "--csv", type=Path, help="append a one-row summary to this CSV")
    _add(p, "--degree-hist", type=Path, help="write per-degree frequencies to this CSV")
    _add(p, "--baseline-trials", type=int)
    _add(p, "--seed", type=int)

    p = sub.add_parser("hpo", help="cross-validated random search with family-specific selection")
    _add(p, "--data", type=Path, required=True)
    _add(p, "--out-dir", type=Path)
    _add(p, "--trials", type=int)
    _add(p, "--folds", type=int)
    _add(p, "--repeats", type=int)
    _add(p, "--epochs", type=int)
    _add(p, "--mask-batch", type=int)
    _add(p, "--z-batch", type=int)
    _add(p, "--shots", type=int)
    _add(p, "--baseline-trials", type=int)
    _add(p, "--family", type=str.upper, choices=["ER", "BP"], help="selection rule (default: dataset header)")
    _add(p, "--seed", type=int)

    p = sub.add_parser("reproduce", help="desk-scale validation tables for all six family/density cells")
    _add(p, "--out-dir", type=Path)
    _add(p, "--nodes", type=int, choices=[6, 7])
    _add(p, "--trials", type=int)
    _add(p, "--folds", type=int)
    _add(p, "--repeats", type=int)
    _add(p, "--epochs", type=int)
    _add(p, "--shots", type=int)
    _add(p, "--baseline-trials", type=int)
    _add(p, "--seed", type=int)
    _add(p, "--cells", nargs="+", help="subset such as bp:sparse er:dense")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file (global keys or a per-command section) and flags."""
    opts = dict(DEFAULTS[args.command])
    if args.config is not None:
        cfg = json.loads(Path(args.config).read_text())
        section = cfg.get(args.command, {})
        opts.update({k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)})
        opts.update({k.replace("-", "_"): v for k, v in section.items()})
    for key, value in vars(args).items():
        if key in ("command", "config", "verbose") or value is None:
            continue
        opts[key] = value
    return opts


def _train_config(o: dict) -> TrainConfig:
    return TrainConfig(learning_rate=o["learning_rate"], epochs=o["epochs"], mask_batch=o["mask_batch"],
                       z_batch=o["z_batch"], init_multiplier=o["init_multiplier"],
                       bandwidth_multiplier=o["bandwidth_multiplier"], seed=o["seed"],
                       unbiased_square=not o["biased"], sigma=o["sigma"])


def _echo(o: dict) -> dict:
    return {k: str(v) if isinstance(v, Path) else v for k, v in o.items()}


def cmd_gen_data(o: dict) -> int:
    family = o["family"].upper()
    spec = DatasetSpec.default(family, o["nodes"], o["density_class"], seed=o["seed"], sample_count=o["count"])
    if o["p"] is not None:
        spec = DatasetSpec(family, o["nodes"], o["density_class"], o["p"], spec.sample_count, o["seed"])
    graphs = generate(spec, rngmod.stream(spec.seed, rngmod.OP_DATASET))
    write_graphs(o["out"], graphs, header={"kind": "dataset", **spec.to_dict()})
    s = summarize(graphs)
    print("nodes,type,class,mean_density,bipartite_pct,mean_beta,N")
    print(f"{spec.node_count},{family},{spec.density_class},{s['mean_density']:.4f},"
          f"{s['bipartite_pct']:.1f},{s['mean_beta']:.3f},{s['count']}")
    return 0


def cmd_train(o: dict) -> int:
    _, data, m = read_graphs(o["data"])
    tc = _train_config(o)
    circuit = build_shallow_ansatz(edge_count(m))
    res = train(circuit, data, tc)
    out = Path(o["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    circuit.with_thetas(res.thetas).save(out / "circuit.json")
    write_csv(out / "loss_trace.csv", [{"epoch": i, "loss": v} for i, v in enumerate(res.losses)])
    write_json(out / "run.json", run_record(res, {"dataset": str(o["data"]), "nodes": m, "options": _echo(o)}))
    if res.losses:
        print(f"trained {circuit.n_params} angles on {data.shape[0]} graphs: "
              f"loss {res.losses[0]:.5f} -> {res.losses[-1]:.5f} in {res.wall_time:.1f}s")
    else:
        print("zero epochs: wrote initial parameters")
    return 0


def cmd_sample(o: dict) -> int:
    circuit = IqpCircuit.load(o["circuit"])
    if circuit.qubit_count > MAX_SAMPLER_QUBITS:
        raise ValueError(f"circuit has {circuit.qubit_count} qubits; exact sampling supports <= {MAX_SAMPLER_QUBITS}")
    gen = sample(circuit, o["shots"], rngmod.stream(o["seed"], rngmod.OP_SAMPLE))
    write_graphs(o["out"], gen, header={"kind": "samples", "shots": o["shots"], "seed": o["seed"]})
    print(f"wrote {o['shots']} samples to {o['out']}")
    return 0


def cmd_eval(o: dict) -> int:
    _, gen, m = read_graphs(o["samples"])
    _, data, m_data = read_graphs(o["data"])
    if m != m_data:
        raise ValueError(f"samples have {m} nodes but the dataset has {m_data}")
    report = build_report(gen, data, baseline_trials=o["baseline_trials"], seed=o["seed"])
    write_json(o["out"], report.to_dict())
    if o["csv"] is not None:
        path = Path(o["csv"])
        row = {"samples": str(o["samples"]), "dataset": str(o["data"]), **report.to_dict()}
        rows = []
        if path.exists():
            from iqpgraph.fileio import read_csv
            rows = read_csv(path)
        write_csv(path, rows + [row], list(row))
    if o["degree_hist"] is not None:
        from iqpgraph.metrics import binomial_pmf
        hist = degree_histogram(gen, m)
        ref = binomial_pmf(m - 1, report.target_mean_density)
        write_csv(o["degree_hist"], [{"degree": k, "generated": hist[k], "binomial": ref[k]} for k in range(m)])
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_hpo(o: dict, jobs: int) -> int:
    header, data, m = read_graphs(o["data"])
    family = o["family"] or (header or {}).get("graph_family")
    if family not in ("ER", "BP"):
        raise ValueError("cannot infer the graph family from the dataset header; pass --family")
    base = TrainConfig(epochs=o["epochs"], mask_batch=o["mask_batch"], z_batch=o["z_batch"], seed=o["seed"])
    hpo, outcomes, chosen = hpo_and_select(family, data, base, trials=o["trials"], folds=o["folds"],
                                          repeats=o["repeats"], seed=o["seed"], shots=o["shots"],
                                          baseline_trials=o["baseline_trials"], jobs=jobs)
    out = Path(o["out_dir"])
    write_csv(out / "hpo_table.csv", hpo.table)
    write_csv(out / "trials.csv", [{"trial": t.trial, "cv_score": hpo.trial_scores[t.trial],
                                    **{k: getattr(t.config, k) for k in
                                       ("learning_rate", "bandwidth_multiplier", "init_multiplier")},
                                    **t.report.to_dict()} for t in outcomes])
    build_shallow_ansatz(edge_count(m)).with_thetas(chosen.result.thetas).save(out / "circuit.json")
    write_graphs(out / "samples.jsonl", chosen.samples, m=m, header={"kind": "samples", "trial": chosen.trial})
    write_json(out / "report.json", chosen.report.to_dict())
    write_json(out / "best.json", {"selected_trial": chosen.trial, "selection_rule": family,
                                   "selected_config": chosen.config.to_dict(),
                                   "cv_best_trial": hpo.trial_configs.index(hpo.best),
                                   "cv_best_config": hpo.best.to_dict(), "cv_best_score": hpo.best_score})
    write_json(out / "run.json", run_record(chosen.result, {"options": _echo(o)}))
    print(f"selected trial {chosen.trial} ({family} rule); CV-best trial "
          f"{hpo.trial_configs.index(hpo.best)} score {hpo.best_score:.5f}")
    return 0


def cmd_reproduce(o: dict, jobs: int) -> int:
    cells = None
    if o["cells"]:
        cells = []
        for item in o["cells"]:
            fam, _, cls = item.partition(":")
            if fam.upper() not in ("ER", "BP") or cls not in ("sparse", "medium", "dense"):
                raise UsageError(f"bad cell {item!r}; expected e.g. bp:sparse")
            cells.append((fam.upper(), cls))
    rows = reproduce(o["out_dir"], nodes=o["nodes"], seed=o["seed"], trials=o["trials"], folds=o["folds"],
                     repeats=o["repeats"], epochs=o["epochs"], shots=o["shots"],
                     baseline_trials=o["baseline_trials"], jobs=jobs, cells=cells)
    cols = ["family", "density_class", "density_error", "bipartite_pct", "baseline_pct", "mean_beta",
            "degree_tvd", "mmd"]
    print(",".join(cols))
    for row in rows:
        print(",".join(f"{row[c]:.4f}" if isinstance(row[c], float) else str(row[c]) for c in cols))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        o = resolve(args)
        if args.command == "gen-data":
            return cmd_gen_data(o)
        if args.command == "train":
            return cmd_train(o)
        if args.command == "sample":
            return cmd_sample(o)
        if args.command == "eval":
            return cmd_eval(o)
        if args.command == "hpo":
            return cmd_hpo(o, args.jobs)
        return cmd_reproduce(o, args.jobs)
    except UsageError as exc:
        print(f"iqpgraph: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"iqpgraph: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
