"""Training loop, validation-based selection, multi-seed orchestration."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..autodiff import backward
from ..autodiff.optim import Adam
from ..autodiff.rng import make_rng, split_streams
from ..chem import parse_smiles
from ..data import Dataset, DatasetSplit, random_split, scaffold_split
from ..featurize import FeaturizeConfig, FeaturizedMolecule, featurize
from ..model.network import MlfgnnModel
from .losses import masked_loss
from .metrics import SingleClassError, masked_rmse, roc_auc_multi

log = logging.getLogger(__name__)


class NonFiniteLossError(FloatingPointError):
    pass


class EmptySpaceError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 300
    lr: float = 1e-3
    batch_size: int = 32  # gradient-accumulation granularity
    seeds: tuple[int, ...] = (0,)
    patience: int = 30
    task_type: str = "regression"
    target_train_rmse: float | None = None  # optional overfit-sanity early exit

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        self.seeds = tuple(self.seeds)


@dataclass
class TrainResult:
    seed: int
    best_epoch: int
    valid_metric: float | None
    test_metric: float | None
    history: list[dict] = field(default_factory=list)
    state: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    metric_name: str
    per_seed: dict[int, float | None]
    mean: float | None
    std: float
    checkpoints: dict[int, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric_name,
            "per_seed": {str(k): v for k, v in self.per_seed.items()},
            "mean": self.mean,
            "std": self.std,
            "checkpoints": {str(k): v for k, v in self.checkpoints.items()},
        }


def aggregate(metric_name: str, per_seed: dict[int, float | None]) -> EvalReport:
    values = [v for v in per_seed.values() if v is not None]
    mean = float(np.mean(values)) if values else None
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return EvalReport(metric_name, dict(per_seed), mean, std)


def prepare_inputs(
    dataset: Dataset, featurize_config: FeaturizeConfig | None = None
) -> tuple[list[FeaturizedMolecule], np.ndarray, np.ndarray]:
    """Featurize every record once; returns (molecules, labels, mask)."""
    featurize_config = featurize_config or FeaturizeConfig()
    mols = [featurize(parse_smiles(smiles), featurize_config) for smiles in dataset.smiles()]
    m, t = len(dataset), dataset.n_tasks
    labels = np.zeros((m, t))
    mask = np.zeros((m, t), dtype=bool)
    for i, (_smiles, row) in enumerate(dataset.records):
        for j, value in enumerate(row):
            if value is not None:
                labels[i, j] = value
                mask[i, j] = True
    return mols, labels, mask


def evaluate_metric(model, mols, labels, mask, indices, task_type) -> float | None:
    """Validation/test metric: mean ROC-AUC or pooled RMSE over ``indices``.

    Returns None for an empty fold or a classification fold without both
    classes in any task (the metric is undefined there).
    """
    if not indices:
        return None
    preds = np.stack([model.forward(mols[i]).data[0] for i in indices])
    sub_labels, sub_mask = labels[indices], mask[indices]
    if task_type == "classification":
        try:
            return roc_auc_multi(preds, sub_labels, sub_mask)
        except SingleClassError:
            log.warning("fold of %d records has a single class; metric undefined", len(indices))
            return None
    return masked_rmse(preds, sub_labels, sub_mask)


def _improved(candidate: float, best: float | None, task_type: str) -> bool:
    if best is None:
        return True
    return candidate > best if task_type == "classification" else candidate < best


def train(
    model: MlfgnnModel,
    mols: list[FeaturizedMolecule],
    labels: np.ndarray,
    mask: np.ndarray,
    split: DatasetSplit,
    config: TrainConfig,
    seed: int,
    log_path: str | Path | None = None,
) -> TrainResult:
    """Train with gradient accumulation, keep the best-validation parameters.

    Each epoch shuffles the training indices (seeded), accumulates gradients
    over ``batch_size`` molecules per optimizer step, then scores the
    validation set. Training stops after ``patience`` non-improving epochs.
    The returned state is the best-validation snapshot (last epoch when the
    validation set is empty), already restored into the model.
    """
    streams = split_streams(seed, ("shuffle", "dropout"))
    optimizer = Adam(model.params, lr=config.lr)
    best_metric: float | None = None
    best_epoch = 0
    best_state = model.state_arrays()
    non_improving = 0
    history: list[dict] = []
    log_fh = open(log_path, "w") if log_path else None
    try:
        for epoch in range(1, config.epochs + 1):
            order = streams["shuffle"].permutation(split.train).tolist()
            epoch_losses = []
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                optimizer.zero_grad()
                scale = 1.0 / len(batch)
                for idx in batch:
                    out = model.forward(mols[idx], train=True, rng=streams["dropout"])
                    loss = masked_loss(out, labels[idx], mask[idx], config.task_type)
                    value = loss.item()
                    if not math.isfinite(value):
                        raise NonFiniteLossError(
                            f"non-finite loss at epoch {epoch}, record {idx}: {value}"
                        )
                    epoch_losses.append(value)
                    backward(loss * scale)
                optimizer.step()
            train_loss = float(np.mean(epoch_losses)) if epoch_losses else float("nan")
            valid_metric = evaluate_metric(
                model, mols, labels, mask, split.valid, config.task_type
            )
            lambda_attn, lambda_adj = model.lambda_values()
            entry = {
                "epoch": epoch,
                "train_loss": train_loss,
                "valid_metric": valid_metric,
                "gate_alpha": model.gate_alpha(),
                "lambda_attn": lambda_attn,
                "lambda_adj": lambda_adj,
            }
            history.append(entry)
            if log_fh:
                log_fh.write(json.dumps(entry, sort_keys=True) + "\n")
            if valid_metric is None:
                best_epoch = epoch
                best_state = model.state_arrays()
            elif _improved(valid_metric, best_metric, config.task_type):
                best_metric = valid_metric
                best_epoch = epoch
                best_state = model.state_arrays()
                non_improving = 0
            else:
                non_improving += 1
                if non_improving >= config.patience:
                    log.info("seed %d: early stop at epoch %d", seed, epoch)
                    break
            if (
                config.target_train_rmse is not None
                and config.task_type == "regression"
                and math.sqrt(train_loss) < config.target_train_rmse
            ):
                log.info("seed %d: train RMSE target reached at epoch %d", seed, epoch)
                break
    finally:
        if log_fh:
            log_fh.close()
    model.load_state_arrays(best_state)
    test_metric = evaluate_metric(model, mols, labels, mask, split.test, config.task_type)
    return TrainResult(
        seed=seed,
        best_epoch=best_epoch,
        valid_metric=best_metric,
        test_metric=test_metric,
        history=history,
        state=best_state,
    )


def multi_seed(
    model_factory: Callable[[int], MlfgnnModel],
    dataset: Dataset,
    config: TrainConfig,
    split_method: str = "random",
    fractions=(0.8, 0.1, 0.1),
    featurize_config: FeaturizeConfig | None = None,
    log_dir: str | Path | None = None,
) -> tuple[EvalReport, dict[int, TrainResult], dict[int, DatasetSplit]]:
    """Run every seed independently and aggregate mean +- sample std.

    Random splits are reseeded per seed; a scaffold split is computed once
    and shared (initialization and shuffling still vary by seed).
    """
    if not config.seeds:
        raise ValueError("need at least one seed")
    mols, labels, mask = prepare_inputs(dataset, featurize_config)
    fixed_split = (
        scaffold_split(dataset, seed=0, fractions=fractions)
        if split_method == "scaffold"
        else None
    )
    metric_name = "roc_auc" if config.task_type == "classification" else "rmse"
    results: dict[int, TrainResult] = {}
    splits: dict[int, DatasetSplit] = {}
    per_seed: dict[int, float] = {}
    for seed in config.seeds:
        split = fixed_split if fixed_split is not None else random_split(dataset, seed, fractions)
        splits[seed] = split
        model = model_factory(seed)
        log_path = Path(log_dir) / f"seed_{seed}_log.jsonl" if log_dir else None
        result = train(model, mols, labels, mask, split, config, seed, log_path)
        results[seed] = result
        per_seed[seed] = result.test_metric
    report = aggregate(metric_name, per_seed)
    return report, results, splits


def sample_search_space(space: dict, budget: int, seed: int) -> list[dict]:
    """Draw ``budget`` uniform samples from the space, deterministically.

    Space values are either an explicit list of choices or a (low, high)
    tuple sampled uniformly (integer bounds give integers).
    """
    if budget < 1:
        raise EmptySpaceError("budget must be >= 1")
    if not space:
        raise EmptySpaceError("search space is empty")
    rng = make_rng(seed)
    samples = []
    for _ in range(budget):
        config = {}
        for key in sorted(space):
            spec = space[key]
            if isinstance(spec, tuple) and len(spec) == 2:
                lo, hi = spec
                if isinstance(lo, int) and isinstance(hi, int):
                    config[key] = int(rng.integers(lo, hi + 1))
                else:
                    config[key] = float(rng.uniform(lo, hi))
            else:
                config[key] = spec[int(rng.integers(0, len(spec)))]
        samples.append(config)
    return samples


def random_search(
    space: dict,
    budget: int,
    seed: int,
    evaluate_config: Callable[[dict], float],
    maximize: bool,
) -> list[tuple[float, dict]]:
    """Evaluate uniform samples and rank by the returned validation metric."""
    samples = sample_search_space(space, budget, seed)
    scored = [(float(evaluate_config(config)), config) for config in samples]
    scored.sort(key=lambda pair: -pair[0] if maximize else pair[0])
    return scored
