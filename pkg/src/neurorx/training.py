"""BCE training of the neural receivers on online-generated frames."""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .autodiff import ops
from .autodiff.checkpoint import CheckpointError
from .autodiff.optim import Adam
from .autodiff.tensor import Tensor, get_default_dtype
from .link import generate_frames, link_code
from .models.io import load_model, save_model
from .models.preprocessing import preprocess_input
from .phy import LinkConfig

METRICS_COLUMNS = ("iteration", "loss", "ebn0_db", "seconds")


class TrainingError(RuntimeError):
    """Raised when training diverges."""


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    Each iteration draws one Eb/N0 uniformly from ``[ebn0_min_db,
    ebn0_max_db]`` and a fresh batch of coded frames. ``micro_batch``
    splits the batch for gradient accumulation (0 keeps it whole) and only
    bounds memory: the gradient equals the full-batch gradient.
    ``mask_pilots`` drops pilot REs from the loss.
    """

    iterations: int = 20000
    batch_size: int = 128
    ebn0_min_db: float = 0.0
    ebn0_max_db: float = 8.0
    learning_rate: float = 1e-3
    seed: int = 0
    checkpoint_every: int = 1000
    mask_pilots: bool = True
    micro_batch: int = 0
    record_wallclock: bool = True

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.ebn0_max_db < self.ebn0_min_db:
            raise ValueError("training Eb/N0 range is empty (max < min)")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be non-negative")
        if self.micro_batch < 0:
            raise ValueError("micro_batch must be non-negative")


@dataclass(frozen=True)
class TrainRecord:
    iteration: int
    loss: float
    ebn0_db: float
    seconds: float


def bce_loss(bits, llrs, mask: np.ndarray | None = None) -> Tensor:
    """Mean binary cross-entropy between bits and LLRs ``log P(1)/P(0)`` over unmasked entries."""
    return ops.bce_with_logits(llrs, np.asarray(bits, dtype=np.float64), mask)


def loss_mask(cfg: LinkConfig, mask_pilots: bool = True) -> np.ndarray:
    """Boolean ``(n_sym, n_sc, bits)`` mask of entries that enter the loss."""
    base = cfg.data_mask if mask_pilots else np.ones((cfg.n_sym, cfg.n_sc), dtype=bool)
    return np.repeat(base[..., None], cfg.bits_per_symbol, axis=-1)


def iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    """Independent stream per iteration so a resumed run sees the same batches."""
    return np.random.default_rng([seed, iteration])


def sample_batch(link: LinkConfig, train: TrainConfig, iteration: int):
    rng = iteration_rng(train.seed, iteration)
    ebn0 = float(rng.uniform(train.ebn0_min_db, train.ebn0_max_db))
    frames = generate_frames(link, train.batch_size, ebn0, rng, code=link_code(link))
    return frames, ebn0


def train_step(model, optimizer: Adam, x: np.ndarray, bits: np.ndarray, mask: np.ndarray, micro_batch: int = 0) -> float:
    """Forward, BCE, backward and one Adam update on a prepared batch.

    Args:
        x: network input ``(B, n_sym, n_sc, features)``.
        bits: target bits ``(B, n_sym, n_sc, bits_per_symbol)``.
        mask: per-frame loss mask ``(n_sym, n_sc, bits_per_symbol)``.

    Returns:
        The batch loss.

    Raises:
        TrainingError: if the loss is not finite; parameters are left untouched.
    """
    batch = len(x)
    chunk = micro_batch if 0 < micro_batch < batch else batch
    optimizer.zero_grad()
    total = 0.0
    for start in range(0, batch, chunk):
        sl = slice(start, start + chunk)
        weight = (min(start + chunk, batch) - start) / batch
        loss = bce_loss(bits[sl], model(x[sl]), np.broadcast_to(mask, bits[sl].shape))
        value = loss.item()
        if not np.isfinite(value):
            optimizer.zero_grad()
            raise TrainingError(f"non-finite loss {value} in batch slice {start}:{start + chunk}")
        if weight != 1.0:
            loss = loss * weight
        loss.backward()
        total += weight * value
    optimizer.step()
    return total


def _optimizer_arrays(optimizer: Adam) -> dict[str, np.ndarray]:
    out = {}
    for name, m in optimizer.state.m.items():
        out[f"__adam_m__.{name}"] = m
        out[f"__adam_v__.{name}"] = optimizer.state.v[name]
    return out


def _restore_optimizer(optimizer: Adam, step: int, extras: dict[str, np.ndarray]) -> None:
    optimizer.state.step = step
    for name, p in optimizer.params.items():
        m = extras.get(f"__adam_m__.{name}")
        v = extras.get(f"__adam_v__.{name}")
        if (m is None) != (v is None):
            raise CheckpointError(f"optimizer state for {name} is incomplete")
        if m is not None:
            optimizer.state.m[name] = m.astype(p.dtype)
            optimizer.state.v[name] = v.astype(p.dtype)


def save_training_state(path, model, optimizer: Adam, link: LinkConfig, train: TrainConfig,
                        iteration: int, model_seed: int = 0) -> None:
    header = {
        "training": {
            "iteration": iteration,
            "adam_step": optimizer.state.step,
            "config": asdict(train),
            "dropout_rng": model.dropout_rng.bit_generator.state,
        }
    }
    save_model(path, model, link, seed=model_seed, extra_header=header, extra_arrays=_optimizer_arrays(optimizer))


def _write_metrics(path: Path, records: list[TrainRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for r in records:
            writer.writerow([r.iteration, repr(r.loss), repr(r.ebn0_db), f"{r.seconds:.6f}"])


def read_metrics(path) -> list[TrainRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [TrainRecord(int(r["iteration"]), float(r["loss"]), float(r["ebn0_db"]), float(r["seconds"])) for r in rows]


@dataclass
class TrainResult:
    model: object
    records: list[TrainRecord]
    optimizer: Adam


def train_loop(
    model,
    link: LinkConfig,
    train: TrainConfig,
    checkpoint_path=None,
    metrics_path=None,
    resume: bool = False,
    model_seed: int = 0,
    callback: Callable[[TrainRecord], None] | None = None,
) -> TrainResult:
    """Train ``model`` for ``train.iterations`` iterations.

    Iterations are numbered from 1. A checkpoint is written every
    ``checkpoint_every`` iterations and after the last one; the metrics CSV
    is rewritten alongside it. With ``resume=True`` and an existing
    checkpoint, the model, optimizer moments, dropout RNG and metrics up to
    the checkpointed iteration are restored and training continues; the
    resulting trace equals an uninterrupted run.
    """
    model.train()
    optimizer = Adam(model.named_parameters(), lr=train.learning_rate)
    records: list[TrainRecord] = []
    start = 1
    if resume and checkpoint_path is not None and Path(checkpoint_path).exists():
        saved, header, extras = load_model(checkpoint_path, link, kind=model.kind)
        state = header.get("training")
        if state is None:
            raise CheckpointError(f"{checkpoint_path} carries no training state to resume from")
        model.load_state_dict(saved.state_dict())
        _restore_optimizer(optimizer, int(state["adam_step"]), extras)
        model.dropout_rng.bit_generator.state = state["dropout_rng"]
        start = int(state["iteration"]) + 1
        if metrics_path is not None and Path(metrics_path).exists():
            records = [r for r in read_metrics(metrics_path) if r.iteration < start]

    mask = loss_mask(link, train.mask_pilots)
    t0 = time.perf_counter()
    for it in range(start, train.iterations + 1):
        frames, ebn0 = sample_batch(link, train, it)
        x = preprocess_input(frames.y, frames.n0).astype(get_default_dtype())
        loss = train_step(model, optimizer, x, frames.bit_grid, mask, train.micro_batch)
        seconds = time.perf_counter() - t0 if train.record_wallclock else 0.0
        rec = TrainRecord(it, loss, ebn0, seconds)
        records.append(rec)
        if callback is not None:
            callback(rec)
        last = it == train.iterations
        if (train.checkpoint_every and it % train.checkpoint_every == 0) or last:
            if checkpoint_path is not None:
                save_training_state(checkpoint_path, model, optimizer, link, train, it, model_seed)
            if metrics_path is not None:
                _write_metrics(Path(metrics_path), records)
    if metrics_path is not None:
        _write_metrics(Path(metrics_path), records)
    model.eval()
    return TrainResult(model=model, records=records, optimizer=optimizer)
