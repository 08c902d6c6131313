"""Seeded hyperparameter search over the node counts and ridge coefficient.

Uniform random search plus an optional successive-halving refinement that
spends the same total training work over a wider cohort by starting on data
subsamples. Both are deterministic per seed and emit a line-delimited trial
log (one record per evaluation: index, n1, n2, n3, lambda, val_accuracy,
seconds).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from . import bls_core, rng
from .bls_core import HyperParams
from .data_metrics import LabeledFeatures, accuracy, one_hot

_VAL_SPLIT_STREAM = 200
_SAMPLE_STREAM = 201


@dataclass(frozen=True)
class SearchSpace:
    """Inclusive integer intervals for the node counts plus ridge choices."""

    n1_range: tuple[int, int] = (1, 20)
    n2_range: tuple[int, int] = (2, 40)
    n3_range: tuple[int, int] = (10, 1000)
    lambda_choices: tuple[float, ...] = (1e-8,)

    def __post_init__(self):
        for name, (lo, hi) in (
            ("n1", self.n1_range),
            ("n2", self.n2_range),
            ("n3", self.n3_range),
        ):
            if lo < 1 or hi < lo:
                raise ValueError(f"{name}_range must satisfy 1 <= low <= high")
        if not self.lambda_choices or any(v < 0 for v in self.lambda_choices):
            raise ValueError("lambda_choices must be nonempty and nonnegative")

    def contains(self, hp: HyperParams) -> bool:
        return (
            self.n1_range[0] <= hp.n1 <= self.n1_range[1]
            and self.n2_range[0] <= hp.n2 <= self.n2_range[1]
            and self.n3_range[0] <= hp.n3 <= self.n3_range[1]
            and hp.lam in self.lambda_choices
        )


@dataclass(frozen=True)
class Trial:
    hyper: HyperParams
    val_accuracy: float
    train_seconds: float
    index: int
    train_rows: int = 0


def trial_record(t: Trial) -> dict:
    return {
        "index": t.index,
        "n1": t.hyper.n1,
        "n2": t.hyper.n2,
        "n3": t.hyper.n3,
        "lambda": t.hyper.lam,
        "val_accuracy": t.val_accuracy,
        "seconds": t.train_seconds,
    }


def trial_lines(trials: list[Trial]) -> list[str]:
    return [json.dumps(trial_record(t)) for t in trials]


def _val_split(data: LabeledFeatures, val_fraction: float, seed: int):
    if data.labels is None:
        raise ValueError("search needs labeled data")
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    n = data.samples
    n_val = int(round(n * val_fraction))
    if n_val < 1 or n - n_val < 2:
        raise ValueError(f"split of {n} samples at {val_fraction} leaves an empty side")
    perm = rng.stream_rng(seed, rng.SPLIT, _VAL_SPLIT_STREAM).permutation(n)
    return perm[n_val:], perm[:n_val]


def _sample_configs(space: SearchSpace, budget: int, seed: int) -> list[HyperParams]:
    g = rng.stream_rng(seed, rng.SPLIT, _SAMPLE_STREAM)
    configs = []
    for i in range(budget):
        configs.append(
            HyperParams(
                n1=int(g.integers(space.n1_range[0], space.n1_range[1] + 1)),
                n2=int(g.integers(space.n2_range[0], space.n2_range[1] + 1)),
                n3=int(g.integers(space.n3_range[0], space.n3_range[1] + 1)),
                lam=float(space.lambda_choices[g.integers(len(space.lambda_choices))]),
                seed=rng.derive_seed(seed, rng.TRIAL, i),
            )
        )
    return configs


def _evaluate(
    data: LabeledFeatures, train_idx: np.ndarray, val_idx: np.ndarray, hp: HyperParams
) -> tuple[float, float]:
    """(validation accuracy, train seconds); degenerate subsamples score 0."""
    t0 = time.perf_counter()
    try:
        model = bls_core.train(
            data.x[train_idx], one_hot(data.labels[train_idx], data.classes), hp
        )
    except ValueError:
        return 0.0, time.perf_counter() - t0
    pred = bls_core.predict_labels(model, data.x[val_idx])
    return accuracy(pred, data.labels[val_idx]), time.perf_counter() - t0


def _best(log: list[Trial]) -> Trial:
    best = log[0]
    for t in log[1:]:
        if t.val_accuracy > best.val_accuracy:
            best = t
    return best


def random_search(
    space: SearchSpace,
    data: LabeledFeatures,
    budget: int,
    val_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[Trial, list[Trial]]:
    """Evaluate `budget` uniform samples from the space; ties go to the
    earliest trial."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    train_idx, val_idx = _val_split(data, val_fraction, seed)
    log = []
    for i, hp in enumerate(_sample_configs(space, budget, seed)):
        acc, secs = _evaluate(data, train_idx, val_idx, hp)
        log.append(
            Trial(hyper=hp, val_accuracy=acc, train_seconds=secs, index=i,
                  train_rows=len(train_idx))
        )
    return _best(log), log


def halving_search(
    space: SearchSpace,
    data: LabeledFeatures,
    budget: int,
    eta: float = 3.0,
    seed: int = 0,
    val_fraction: float = 0.2,
) -> tuple[Trial, list[Trial]]:
    """Successive halving over a cohort of `budget` configs.

    Round i trains the survivors on an eta^(i - rounds + 1) prefix of the
    shuffled training split and keeps the top 1/eta; the final round always
    runs on the full training split, so the returned best comes from a
    full-data evaluation.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if eta <= 1.0:
        raise ValueError("eta must exceed 1")
    train_idx, val_idx = _val_split(data, val_fraction, seed)
    configs = _sample_configs(space, budget, seed)
    rounds = max(1, math.ceil(math.log(budget) / math.log(eta)))

    alive = list(range(budget))
    log: list[Trial] = []
    final: dict[int, Trial] = {}
    for r in range(rounds):
        frac = eta ** float(r - rounds + 1)
        n_sub = max(4, int(round(len(train_idx) * frac)))
        subset = train_idx[:n_sub]
        scored = []
        for i in alive:
            acc, secs = _evaluate(data, subset, val_idx, configs[i])
            t = Trial(hyper=configs[i], val_accuracy=acc, train_seconds=secs,
                      index=i, train_rows=n_sub)
            log.append(t)
            scored.append(t)
        if r == rounds - 1:
            final = {t.index: t for t in scored}
        else:
            keep = max(1, math.ceil(len(alive) / eta))
            scored.sort(key=lambda t: (-t.val_accuracy, t.index))
            alive = sorted(t.index for t in scored[:keep])
    return _best([final[i] for i in sorted(final)]), log
