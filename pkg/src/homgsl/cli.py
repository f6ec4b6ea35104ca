"""Command-line front end: ``homgsl train|homophily|oracle|sbm|eval``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from . import kernels, metrics
from .datasets import (
    Dataset,
    DatasetError,
    SbmParams,
    generate_sbm,
    load_dataset,
    oracle_perturb,
    read_edge_file,
    save_dataset,
    write_edges,
)
from .encoder import DivergenceError
from .graph import GraphError, edge_homophily
from .pipeline import ConfigError, HoleConfig, preset, run

log = logging.getLogger("homgsl")

METRIC_COLUMNS = ("round", "homophily", "acc", "nmi", "ari", "purity", "loss_gsl", "loss_cls",
                  "edges_added", "edges_removed", "num_edges")
ORACLE_COLUMNS = ("target_h", "achieved_h", "seed", "acc", "nmi", "ari")

# flag name -> config field
_OVERRIDES = {
    "gsl_epochs": "gsl_epochs", "gamma": "gamma", "xi": "xi", "eta": "eta", "hops": "hops",
    "kappa": "kappa", "dim": "dim", "lr": "lr", "pretrain_epochs": "pretrain_epochs",
    "joint_epochs": "joint_epochs", "k": "k",
}


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def build_config(args) -> HoleConfig:
    """Preset, then JSON file, then individual flags."""
    fields = {}
    if args.preset:
        fields.update(preset(args.preset).to_dict())
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {args.config} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
        fields.update(loaded)
    for flag, name in _OVERRIDES.items():
        v = getattr(args, flag, None)
        if v is not None:
            fields[name] = v
    fields["seed"] = args.seed
    return HoleConfig.from_dict(fields)


def _load(path) -> Dataset:
    if path is None:
        raise UsageError("--data is required")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ds = load_dataset(path)
    for w in caught:
        log.warning("%s", w.message)
    return ds


def _trace_rows(traces):
    for t in traces:
        yield {c: getattr(t, c) for c in METRIC_COLUMNS}


def cmd_train(args) -> int:
    cfg = build_config(args)
    ds = _load(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run(cfg, ds, keep_graphs=args.save_structures)
    _write_csv(out / "metrics.csv", METRIC_COLUMNS, _trace_rows(result.traces))
    np.savetxt(out / "assignments.tsv", result.labels, fmt="%d")
    if args.save_embedding:
        np.savetxt(out / "embedding.tsv", result.z, delimiter="\t", fmt="%.17g")
    if args.save_structures:
        for r, g in enumerate(result.graphs[1:], start=1):
            write_edges(out / f"structure_{r}.edges.tsv", g)
    final = result.traces[-1]
    report = {
        "config": cfg.to_dict(),
        "dataset": ds.summary(),
        "final": {c: getattr(final, c) for c in ("acc", "nmi", "ari", "purity", "homophily")},
        "timings": result.timings,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    if final.acc is not None:
        print(f"final acc={final.acc:.4f} nmi={final.nmi:.4f} ari={final.ari:.4f} "
              f"purity={final.purity:.4f} homophily={final.homophily:.4f}")
    else:
        print(f"final clusters written to {out / 'assignments.tsv'}")
    return 0


_STRUCT_RE = re.compile(r"structure_(\d+)\.edges\.tsv$")


def cmd_homophily(args) -> int:
    ds = _load(args.data)
    if ds.labels is None:
        raise DatasetError(f"{args.data} has no labels.tsv")
    if args.run is None:
        print(f"{ds.name}\t{edge_homophily(ds.graph, ds.labels):.6f}")
        return 0
    files = sorted(Path(args.run).glob("structure_*.edges.tsv"),
                   key=lambda p: int(_STRUCT_RE.search(p.name).group(1)))
    print(f"0\t{edge_homophily(ds.graph, ds.labels):.6f}")
    for f in files:
        g = read_edge_file(f, ds.num_nodes)
        print(f"{_STRUCT_RE.search(f.name).group(1)}\t{edge_homophily(g, ds.labels):.6f}")
    return 0


def oracle_targets(start: float, cap: float, step: float = 0.05) -> list:
    """``start, start+step, ...`` up to and including ``cap``."""
    if step <= 0:
        raise ConfigError("step must be positive")
    count = int(math.floor((cap - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(max(count, 0))]


def cmd_oracle(args) -> int:
    ds = _load(args.data)
    if ds.labels is None:
        raise DatasetError("the oracle study needs labels")
    base = build_config(args).replace(gsl_epochs=0)
    h0 = edge_homophily(ds.graph, ds.labels)
    targets = oracle_targets(h0, args.cap, args.step)
    rows = []
    for t in targets:
        for s in range(args.seed, args.seed + args.seeds):
            perturbed = oracle_perturb(ds, t, seed=s)
            res = run(base.replace(seed=s), perturbed)
            m = metrics.evaluate(res.labels, ds.labels)
            rows.append({"target_h": t, "achieved_h": perturbed.homophily(), "seed": s,
                         "acc": m["acc"], "nmi": m["nmi"], "ari": m["ari"]})
            print(f"target={t:.4f} achieved={rows[-1]['achieved_h']:.4f} seed={s} acc={m['acc']:.4f}",
                  flush=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "oracle.csv", ORACLE_COLUMNS, rows)
    return 0


def cmd_sbm(args) -> int:
    sizes = tuple(int(s) for s in args.blocks.split(","))
    ds = generate_sbm(SbmParams(sizes, args.p_in, args.p_out, args.feature_dim, args.signal, args.seed))
    save_dataset(ds, args.out)
    print(ds.summary())
    return 0


def _read_assignments(path) -> np.ndarray:
    try:
        return np.loadtxt(path, dtype=np.int64, ndmin=1)
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot read assignments {path}: {exc}") from None


def cmd_eval(args) -> int:
    pred = _read_assignments(args.pred)
    truth = _read_assignments(args.labels) if args.labels else _load(args.data).labels
    if truth is None:
        raise DatasetError("no labels to evaluate against")
    if pred.shape != truth.shape:
        raise DatasetError(f"{pred.size} assignments but {truth.size} labels")
    m = metrics.evaluate(pred, truth)
    print(" ".join(f"{k}={v:.6f}" for k, v in m.items()))
    return 0


def _add_config_flags(p) -> None:
    p.add_argument("--data", help="dataset directory")
    p.add_argument("--preset", help="named hyperparameter preset, e.g. cora")
    p.add_argument("--config", help="JSON file with config fields")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gsl-epochs", dest="gsl_epochs", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--hops", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--k", type=int, help="number of clusters (default: from the dataset)")
    p.add_argument("--pretrain-epochs", dest="pretrain_epochs", type=int)
    p.add_argument("--joint-epochs", dest="joint_epochs", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homgsl", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run clustering with structure learning")
    _add_config_flags(p)
    p.add_argument("--out", default="run")
    p.add_argument("--save-structures", dest="save_structures", action="store_true")
    p.add_argument("--save-embedding", dest="save_embedding", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("homophily", help="edge homophily of a dataset or of saved structures")
    p.add_argument("--data", required=True)
    p.add_argument("--run", help="run directory holding structure_<r>.edges.tsv files")
    p.set_defaults(func=cmd_homophily)

    p = sub.add_parser("oracle", help="label-oracle homophily sweep without structure learning")
    _add_config_flags(p)
    p.add_argument("--out", default="oracle")
    p.add_argument("--cap", type=float, default=0.9)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--seeds", type=int, default=5, help="number of consecutive seeds from --seed")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sbm", help="write a planted-partition dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--blocks", default="100,100")
    p.add_argument("--p-in", dest="p_in", type=float, default=0.3)
    p.add_argument("--p-out", dest="p_out", type=float, default=0.02)
    p.add_argument("--feature-dim", dest="feature_dim", type=int, default=16)
    p.add_argument("--signal", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sbm)

    p = sub.add_parser("eval", help="score an assignments file")
    p.add_argument("--pred", required=True)
    p.add_argument("--labels", help="labels file; defaults to the dataset's labels.tsv")
    p.add_argument("--data")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    kernels.set_threads()
    try:
        return args.func(args)
    except (ConfigError, DatasetError, GraphError, UsageError, MemoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DivergenceError, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
