"""Command-line interface: featurize, train, predict, explain, gradcheck.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
Config files are JSON with optional "model", "train" and "featurize"
sections; every key mirrors the corresponding dataclass field. The env var
MOLFUSION_LOG sets log verbosity (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .autodiff.checkpoint import (
    DigestMismatchError,
    config_digest,
    load_checkpoint,
    save_checkpoint,
)
from .autodiff.gradcheck import grad_check
from .autodiff.rng import make_rng
from .chem import SmilesError, parse_smiles
from .chem.graph import Atom, Bond, BondOrder, MolecularGraph
from .chem.perception import annotate
from .data import DataError, load_csv
from .featurize import FeaturizeConfig, featurize
from .model import ConfigError, ModelConfig
from .model.network import MlfgnnModel
from .train import TrainConfig, multi_seed

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


@dataclass
class RunManifest:
    command: str
    config_digest: str
    dataset_checksum: str
    seeds: list[int]
    version: str
    started_at: str
    finished_at: str | None = None
    status: str = "running"

    def write(self, path: Path) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(asdict(self), indent=1, sort_keys=True))
        tmp.replace(path)


def _utc_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        config = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    unknown = set(config) - {"model", "train", "featurize"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return config


def resolve_configs(
    file_config: dict,
    task: str,
    n_tasks: int,
    ablation: str | None = None,
    seeds: tuple[int, ...] | None = None,
    epochs: int | None = None,
) -> tuple[ModelConfig, TrainConfig, FeaturizeConfig]:
    try:
        featurize_config = FeaturizeConfig.from_dict(file_config.get("featurize", {}))
        model_kwargs = dict(file_config.get("model", {}))
        model_kwargs["task"] = task
        model_kwargs["n_tasks"] = n_tasks
        if ablation is not None:
            model_kwargs["ablation"] = ablation
        model_kwargs["fingerprint_dim"] = featurize_config.fingerprint_length
        model_config = ModelConfig(**model_kwargs)
        train_kwargs = dict(file_config.get("train", {}))
        train_kwargs["task_type"] = task
        if seeds is not None:
            train_kwargs["seeds"] = seeds
        if epochs is not None:
            train_kwargs["epochs"] = epochs
        train_config = TrainConfig(**train_kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:  # bad keys/values in the file
        raise ConfigError(str(exc)) from exc
    return model_config, train_config, featurize_config


def combined_config_dict(model_config, train_config, featurize_config) -> dict:
    return {
        "model": model_config.to_dict(),
        "train": {
            "epochs": train_config.epochs,
            "lr": train_config.lr,
            "batch_size": train_config.batch_size,
            "seeds": list(train_config.seeds),
            "patience": train_config.patience,
            "task_type": train_config.task_type,
        },
        "featurize": featurize_config.to_dict(),
    }


def random_molecule_graph(n_atoms: int, seed: int = 0) -> MolecularGraph:
    """Random connected heavy-atom graph (tree plus an occasional ring bond).

    Elements are drawn after the topology so degrees never exceed valence.
    """
    rng = make_rng(seed)
    bonds = []
    for i in range(1, n_atoms):
        parent = int(rng.integers(0, i))
        bonds.append(Bond(parent, i, BondOrder.SINGLE))
    if n_atoms >= 4 and rng.random() < 0.7:
        existing = {b.key for b in bonds}
        for _ in range(4):
            u, v = sorted(rng.choice(n_atoms, size=2, replace=False).tolist())
            if (u, v) not in existing:
                bonds.append(Bond(u, v, BondOrder.SINGLE))
                break
    degree = [0] * n_atoms
    for b in bonds:
        degree[b.u] += 1
        degree[b.v] += 1
    atoms = []
    for i in range(n_atoms):
        if degree[i] >= 4:
            pool = ["C"]
        elif degree[i] == 3:
            pool = ["C", "C", "N"]
        else:
            pool = ["C", "C", "C", "N", "O"]
        atoms.append(Atom(element=pool[int(rng.integers(0, len(pool)))]))
    graph = MolecularGraph(atoms, bonds)
    annotate(graph)
    return graph


# -- featurize ---------------------------------------------------------------


def cmd_featurize(args) -> int:
    components = tuple(args.fingerprints.split(",")) if args.fingerprints else None
    file_config = load_config_file(args.config)
    featurize_config = FeaturizeConfig.from_dict(file_config.get("featurize", {}))
    if components:
        featurize_config = FeaturizeConfig.from_dict(
            {**featurize_config.to_dict(), "components": components}
        )
    raw = Path(args.input).read_text("utf-8").splitlines()
    import csv as _csv

    reader = _csv.DictReader(raw)
    if not reader.fieldnames or args.smiles_col not in reader.fieldnames:
        raise DataError(f"{args.input}: missing SMILES column {args.smiles_col!r}")
    records = []
    n_errors = 0
    for row_num, row in enumerate(reader, start=2):
        smiles = (row[args.smiles_col] or "").strip()
        try:
            mol = featurize(parse_smiles(smiles), featurize_config)
        except SmilesError as exc:
            records.append({"row": row_num, "smiles": smiles, "error": str(exc)})
            n_errors += 1
            continue
        src, dst, feats = mol.directed_edges()
        bonds = [
            {"u": int(u), "v": int(v), "features": feats[k].tolist()}
            for k, (u, v) in enumerate(zip(src, dst))
            if u < v
        ]
        records.append(
            {
                "row": row_num,
                "smiles": smiles,
                "n_atoms": mol.n_atoms,
                "atom_features": mol.atom_features.tolist(),
                "bonds": bonds,
                "fingerprint": mol.fingerprint.tolist(),
            }
        )
    if records and n_errors == len(records):
        raise DataError(f"{args.input}: every row failed to parse")
    with open(args.out, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"wrote {len(records)} records ({n_errors} errors) to {args.out}")
    return EXIT_OK


# -- train -------------------------------------------------------------------


def _label_columns(args, dataset_header: list[str]) -> list[str]:
    if args.label_cols:
        return [c.strip() for c in args.label_cols.split(",")]
    return [c for c in dataset_header if c != args.smiles_col]


def cmd_train(args) -> int:
    task = {"cls": "classification", "reg": "regression"}[args.task]
    file_config = load_config_file(args.config)
    import csv as _csv

    with open(args.data, newline="") as fh:
        header = next(_csv.reader(fh))
    label_cols = _label_columns(args, header)
    dataset = load_csv(args.data, args.smiles_col, label_cols, task)
    seeds = tuple(range(args.seeds)) if args.seeds is not None else None
    model_config, train_config, featurize_config = resolve_configs(
        file_config, task, dataset.n_tasks, ablation=args.ablate, seeds=seeds,
        epochs=args.epochs,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    full_config = combined_config_dict(model_config, train_config, featurize_config)
    manifest = RunManifest(
        command=" ".join(sys.argv),
        config_digest=config_digest(full_config),
        dataset_checksum=dataset.checksum,
        seeds=list(train_config.seeds),
        version=__version__,
        started_at=_utc_now(),
    )
    manifest_path = out_dir / "manifest.json"
    manifest.write(manifest_path)

    report, results, splits = multi_seed(
        lambda seed: MlfgnnModel(model_config, seed=seed),
        dataset,
        train_config,
        split_method=args.split,
        featurize_config=featurize_config,
        log_dir=out_dir,
    )
    for seed, result in results.items():
        ckpt_path = out_dir / f"seed_{seed}.ckpt"
        save_checkpoint(ckpt_path, full_config, result.state)
        report.checkpoints[seed] = ckpt_path.name
        splits[seed].save(out_dir / f"seed_{seed}_split.json", dataset.checksum)
    report_payload = report.to_dict()
    report_payload["best_epochs"] = {str(s): r.best_epoch for s, r in results.items()}
    report_payload["valid_metrics"] = {str(s): r.valid_metric for s, r in results.items()}
    (out_dir / "report.json").write_text(json.dumps(report_payload, indent=1, sort_keys=True))

    manifest.finished_at = _utc_now()
    manifest.status = "complete"
    manifest.write(manifest_path)
    mean = "undefined" if report.mean is None else f"{report.mean:.4f}"
    print(f"{report.metric_name}: {mean} +- {report.std:.4f} over seeds {list(train_config.seeds)}")
    return EXIT_OK


# -- predict -------------------------------------------------------------------


def build_model_from_checkpoint(path: str, force: bool = False) -> tuple[MlfgnnModel, dict]:
    config, arrays = load_checkpoint(path, force=force)
    model_config = ModelConfig.from_dict(config["model"])
    model = MlfgnnModel(model_config, seed=0)
    model.load_state_arrays(arrays)
    return model, config


def cmd_predict(args) -> int:
    model, config = build_model_from_checkpoint(args.checkpoint, force=args.force)
    featurize_config = FeaturizeConfig.from_dict(config["featurize"])
    import csv as _csv

    raw = Path(args.input).read_text("utf-8").splitlines()
    reader = _csv.DictReader(raw)
    if not reader.fieldnames or args.smiles_col not in reader.fieldnames:
        raise DataError(f"{args.input}: missing SMILES column {args.smiles_col!r}")
    n_tasks = model.config.n_tasks
    pred_cols = [f"prediction_{i}" for i in range(n_tasks)] if n_tasks > 1 else ["prediction"]
    n_errors = 0
    with open(args.out, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow([args.smiles_col, *pred_cols])
        for row in reader:
            smiles = (row[args.smiles_col] or "").strip()
            try:
                mol = featurize(parse_smiles(smiles), featurize_config)
                preds = model.predict(mol)
                writer.writerow([smiles, *[repr(float(p)) for p in preds]])
            except (SmilesError, ValueError) as exc:
                n_errors += 1
                writer.writerow([smiles, *[f"ERROR:{exc}" for _ in pred_cols]])
    print(f"predictions written to {args.out} ({n_errors} error rows)")
    return EXIT_OK


# -- explain -------------------------------------------------------------------


def cmd_explain(args) -> int:
    model, config = build_model_from_checkpoint(args.checkpoint, force=args.force)
    featurize_config = FeaturizeConfig.from_dict(config["featurize"])
    mol = featurize(parse_smiles(args.smiles), featurize_config)
    trace: dict = {}
    out = model.forward(mol, trace=trace)
    prediction = out.data[0].tolist()
    bundle = {
        "smiles": args.smiles,
        "n_atoms": mol.n_atoms,
        "prediction": prediction,
        "gate_alpha": trace.get("gate_alpha"),
        "lambda_attn": trace.get("lambda_attn", []),
        "lambda_adj": trace.get("lambda_adj", []),
        "gat_attention": [m.tolist() for m in trace.get("gat_attention", [])],
        "transformer_attention": [
            [head.tolist() for head in layer] for layer in trace.get("transformer_attention", [])
        ],
        "readout_attention": trace.get("readout_attention", np.zeros(0)).tolist(),
        "cross_attention": [head.tolist() for head in trace.get("cross_attention", [])],
        "cross_attention_tokens": ["virtual_node", *range(mol.n_atoms)],
    }
    Path(args.out).write_text(json.dumps(bundle, sort_keys=True))
    print(f"interpretability bundle written to {args.out}")
    return EXIT_OK


# -- gradcheck -----------------------------------------------------------------


def cmd_gradcheck(args) -> int:
    file_config = load_config_file(args.config)
    model_config, _train_config, featurize_config = resolve_configs(
        file_config, "regression", 1, ablation=args.ablate
    )
    graph = random_molecule_graph(args.atoms, seed=args.seed)
    mol = featurize(graph, featurize_config)
    model = MlfgnnModel(model_config, seed=args.seed)

    from .autodiff import tensor as T

    def f():
        out = model.forward(mol)
        return T.sum_(T.mul(out, out))

    tensors = {p.name: p.tensor for p in model.params}
    report = grad_check(
        f,
        tensors,
        rtol=1e-3,
        atol=1e-6,
        max_coords_per_tensor=args.coords_per_group,
        rng=make_rng(args.seed),
    )
    print(report.summary())
    print(f"parameter groups covered: {len(report.per_tensor)}")
    return EXIT_OK if report.passed else EXIT_VERIFY


# -- entry ---------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="molfusion", description=__doc__)
    parser.add_argument("--version", action="version", version=f"molfusion {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="emit per-molecule feature records as JSONL")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fingerprints", default=None, help="comma list: morgan,keys,erg")
    p.add_argument("--smiles-col", default="smiles")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train with the multi-seed protocol")
    p.add_argument("--data", required=True)
    p.add_argument("--task", required=True, choices=["cls", "reg"])
    p.add_argument("--split", default="random", choices=["random", "scaffold"])
    p.add_argument("--config", default=None)
    p.add_argument("--seeds", type=int, default=None, help="number of seeds (0..k-1)")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--smiles-col", default="smiles")
    p.add_argument("--label-cols", default=None, help="comma list; default: all non-smiles columns")
    p.add_argument(
        "--ablate",
        default=None,
        choices=["gat-only", "transformer-only", "no-fp"],
        help="train an ablated variant",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--smiles-col", default="smiles")
    p.add_argument("--force", action="store_true", help="ignore config digest mismatch")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="export attention/gate matrices as JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--smiles", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full model")
    p.add_argument("--config", default=None)
    p.add_argument("--atoms", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coords-per-group", type=int, default=4)
    p.add_argument(
        "--ablate", default=None, choices=["gat-only", "transformer-only", "no-fp"]
    )
    p.set_defaults(func=cmd_gradcheck)
    return parser


_ABLATION_FLAG = {"gat-only": "gat_only", "transformer-only": "transformer_only", "no-fp": "no_fingerprint"}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MOLFUSION_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "ablate", None):
        args.ablate = _ABLATION_FLAG[args.ablate]
    try:
        return args.func(args)
    except (DataError, SmilesError, DigestMismatchError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
