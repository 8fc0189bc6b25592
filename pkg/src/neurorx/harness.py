"""Monte-Carlo BER/BLER sweeps and per-grid timing."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import ldpc
from .link import generate_frames, grid_to_codeword_llrs, link_code
from .phy import LinkConfig

SWEEP_COLUMNS = ("ebn0_db", "bits_sent", "bit_errors", "ber", "blocks_sent", "block_errors", "bler", "seconds")


@dataclass(frozen=True)
class SweepConfig:
    """Monte-Carlo sweep settings.

    Each Eb/N0 point runs chunks of ``frames_per_chunk`` frames until
    ``target_block_errors`` block errors are seen or ``max_frames`` frames
    were sent. Chunk ``c`` of point ``i`` draws from the stream
    ``[seed, i, c]`` and chunks are aggregated in order with the same
    stopping rule, so the result does not depend on ``workers``.
    With ``coded=False`` the raw bits are mapped directly, Eb/N0 uses rate
    one, and a block is one frame's worth of bits.
    """

    ebn0_db: tuple[float, ...] = (-2.0, 0.0, 2.0, 4.0, 6.0)
    max_frames: int = 3200
    target_block_errors: int = 1000
    receiver: str = "classical"
    checkpoint: str | None = None
    seed: int = 0
    output: str | None = None
    frames_per_chunk: int = 100
    workers: int = 1
    coded: bool = True
    decoder_iterations: int = 20
    record_wallclock: bool = True

    def __post_init__(self):
        object.__setattr__(self, "ebn0_db", tuple(float(e) for e in self.ebn0_db))
        if not self.ebn0_db:
            raise ValueError("ebn0_db must list at least one point")
        if self.target_block_errors < 1:
            raise ValueError("target_block_errors must be >= 1")
        if self.max_frames < 1 or self.frames_per_chunk < 1:
            raise ValueError("max_frames and frames_per_chunk must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.decoder_iterations < 1:
            raise ValueError("decoder_iterations must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    ebn0_db: float
    bits_sent: int
    bit_errors: int
    ber: float
    blocks_sent: int
    block_errors: int
    bler: float
    seconds: float

    @classmethod
    def from_counts(cls, ebn0_db, bits_sent, bit_errors, blocks_sent, block_errors, seconds) -> "SweepRow":
        return cls(
            ebn0_db=float(ebn0_db),
            bits_sent=int(bits_sent),
            bit_errors=int(bit_errors),
            ber=bit_errors / bits_sent if bits_sent else 0.0,
            blocks_sent=int(blocks_sent),
            block_errors=int(block_errors),
            bler=block_errors / blocks_sent if blocks_sent else 0.0,
            seconds=float(seconds),
        )


def simulate_chunk(receiver, link: LinkConfig, sweep: SweepConfig, point: int, chunk: int, frames: int):
    """Error counts ``(bits, bit_errors, blocks, block_errors)`` of one chunk."""
    rng = np.random.default_rng([sweep.seed, point, chunk])
    ebn0 = sweep.ebn0_db[point]
    code = link_code(link) if sweep.coded else None
    fb = generate_frames(link, frames, ebn0, rng, code=code, coded=sweep.coded)
    llr = grid_to_codeword_llrs(receiver.predict_llr(fb.y, fb.n0, fb.h), link)
    if sweep.coded:
        decoded = ldpc.decode_bp(code, llr, max_iters=sweep.decoder_iterations).bits
    else:
        decoded = (llr > 0).astype(np.uint8)
    errors = decoded != fb.msg
    return errors.size, int(errors.sum()), frames, int(errors.any(axis=1).sum())


def _chunk_sizes(sweep: SweepConfig) -> list[int]:
    full, rest = divmod(sweep.max_frames, sweep.frames_per_chunk)
    return [sweep.frames_per_chunk] * full + ([rest] if rest else [])


def _run_point(receiver, link, sweep, point, pool) -> SweepRow:
    t0 = time.perf_counter()
    sizes = _chunk_sizes(sweep)
    bits = bit_err = blocks = block_err = 0
    c = 0
    while c < len(sizes) and block_err < sweep.target_block_errors:
        wave = range(c, min(c + sweep.workers, len(sizes)))
        if pool is None:
            results = (simulate_chunk(receiver, link, sweep, point, k, sizes[k]) for k in wave)
        else:
            results = pool.map(simulate_chunk, *zip(*[(receiver, link, sweep, point, k, sizes[k]) for k in wave]))
        for res in results:
            bits += res[0]
            bit_err += res[1]
            blocks += res[2]
            block_err += res[3]
            c += 1
            if block_err >= sweep.target_block_errors:
                break
    seconds = time.perf_counter() - t0 if sweep.record_wallclock else 0.0
    return SweepRow.from_counts(sweep.ebn0_db[point], bits, bit_err, blocks, block_err, seconds)


def run_sweep(sweep: SweepConfig, link: LinkConfig, receiver=None, progress=None) -> list[SweepRow]:
    """BER/BLER at every Eb/N0 point, in the listed order.

    Args:
        receiver: fitted receiver; built from ``sweep.receiver`` and
            ``sweep.checkpoint`` if None.
        progress: optional callback receiving each finished row.

    Returns:
        One row per point. If ``sweep.output`` is set the CSV is written there.
    """
    if receiver is None:
        from .estimators import make_receiver

        receiver = make_receiver(sweep.receiver, link, sweep.checkpoint)
    rows = []
    pool = ProcessPoolExecutor(sweep.workers) if sweep.workers > 1 else None
    try:
        for i in range(len(sweep.ebn0_db)):
            row = _run_point(receiver, link, sweep, i, pool)
            rows.append(row)
            if progress is not None:
                progress(row)
    finally:
        if pool is not None:
            pool.shutdown()
    if sweep.output:
        write_sweep_csv(sweep.output, rows)
    return rows


def format_sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([
            repr(r.ebn0_db), r.bits_sent, r.bit_errors, repr(r.ber),
            r.blocks_sent, r.block_errors, repr(r.bler), f"{r.seconds:.6f}",
        ])
    return buf.getvalue()


def write_sweep_csv(path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_sweep_csv(rows))


def read_sweep_csv(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(SWEEP_COLUMNS)}")
        types = {f.name: f.type for f in fields(SweepRow)}
        return [SweepRow(**{k: (int(v) if types[k] == "int" else float(v)) for k, v in r.items()}) for r in reader]


@dataclass(frozen=True)
class TimingRow:
    receiver: str
    mean_ms: float
    std_ms: float
    runs: int


def run_timing(receivers: dict, link: LinkConfig, ebn0_db: float = 4.0, warmup: int = 10, runs: int = 100,
               seed: int = 0) -> list[TimingRow]:
    """Wall-clock LLR computation time per resource grid.

    Every receiver processes the same frames one grid at a time; the
    first ``warmup`` calls are discarded.
    """
    if runs < 1 or warmup < 0:
        raise ValueError("runs must be >= 1 and warmup >= 0")
    fb = generate_frames(link, warmup + runs, ebn0_db, np.random.default_rng(seed), coded=False)
    rows = []
    for name, rx in receivers.items():
        samples = []
        for i in range(warmup + runs):
            y, n0, h = fb.y[i:i + 1], fb.n0[i:i + 1], fb.h[i:i + 1]
            t0 = time.perf_counter()
            rx.predict_llr(y, n0, h)
            dt = time.perf_counter() - t0
            if i >= warmup:
                samples.append(dt * 1e3)
        arr = np.asarray(samples)
        rows.append(TimingRow(name, float(arr.mean()), float(arr.std(ddof=1)) if runs > 1 else 0.0, runs))
    return rows


def format_timing(rows: list[TimingRow]) -> str:
    lines = ["receiver,mean_ms,std_ms,runs"]
    lines += [f"{r.receiver},{r.mean_ms:.4f},{r.std_ms:.4f},{r.runs}" for r in rows]
    return "\n".join(lines) + "\n"


def plot_columns(rows: list[SweepRow], columns=("ebn0_db", "ber", "bler")) -> str:
    """Whitespace-separated columns with a ``#`` header, ready for gnuplot."""
    for c in columns:
        if c not in SWEEP_COLUMNS:
            raise ValueError(f"unknown column {c!r}; choose from {', '.join(SWEEP_COLUMNS)}")
    lines = ["# " + " ".join(columns)]
    lines += [" ".join(repr(getattr(r, c)) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"
