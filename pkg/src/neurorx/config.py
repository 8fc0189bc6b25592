"""Line-oriented ``key = value`` configuration shared by every subcommand.

Blank lines and lines starting with ``#`` or ``;`` are ignored. Lists are
comma separated. Every key has a default, so an empty file yields the
default configuration. Unknown keys, unparsable values and out-of-range
values raise :class:`ConfigError` naming the key.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .harness import SweepConfig
from .models.config import DatConfig, RdnlaConfig
from .phy import LinkConfig
from .training import TrainConfig


class ConfigError(ValueError):
    """Invalid configuration key or value."""


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _optional_str(text: str) -> str | None:
    text = text.strip()
    return text or None


@dataclass(frozen=True)
class Key:
    name: str
    section: str
    field: str
    parse: Callable[[str], object]
    help: str


KEYS: tuple[Key, ...] = (
    # link
    Key("n_sym", "link", "n_sym", int, "OFDM symbols per frame"),
    Key("n_sc", "link", "n_sc", int, "subcarriers per frame"),
    Key("n_rx", "link", "n_rx", int, "receive antennas"),
    Key("bits_per_symbol", "link", "bits_per_symbol", int, "bits per QAM symbol (2, 4 or 6)"),
    Key("pilot_symbols", "link", "pilot_symbols", _int_list, "comma-separated pilot OFDM symbol indices"),
    Key("code_rate", "link", "code_rate", float, "LDPC code rate"),
    Key("channel", "link", "channel", str, "rayleigh or awgn"),
    Key("n_taps", "link", "n_taps", int, "channel taps"),
    Key("tap_decay", "link", "tap_decay", float, "power-delay profile e-folding length in taps"),
    Key("fft_size", "link", "fft_size", int, "FFT size setting the tap spacing"),
    Key("pilot_sequence", "link", "pilot_sequence", str, "constant (one symbol on every pilot RE) or qpsk (seeded random)"),
    Key("pilot_seed", "link", "pilot_seed", int, "seed of the QPSK pilot sequence"),
    Key("cp_length", "link", "cp_length", int, "cyclic prefix length (bookkeeping only)"),
    Key("code_seed", "link", "code_seed", int, "seed of the LDPC code construction"),
    # training
    Key("iterations", "train", "iterations", int, "training iterations"),
    Key("batch_size", "train", "batch_size", int, "frames per training iteration"),
    Key("train_ebn0_min", "train", "ebn0_min_db", float, "lower end of the training Eb/N0 range (dB)"),
    Key("train_ebn0_max", "train", "ebn0_max_db", float, "upper end of the training Eb/N0 range (dB)"),
    Key("learning_rate", "train", "learning_rate", float, "Adam learning rate"),
    Key("train_seed", "train", "seed", int, "seed of the training data stream"),
    Key("checkpoint_every", "train", "checkpoint_every", int, "iterations between checkpoints (0: only at the end)"),
    Key("mask_pilots", "train", "mask_pilots", _bool, "exclude pilot REs from the loss"),
    Key("micro_batch", "train", "micro_batch", int, "gradient-accumulation slice size (0: whole batch)"),
    Key("metrics", "train", "metrics", _optional_str, "training metrics CSV path"),
    # sweep
    Key("ebn0_db", "sweep", "ebn0_db", _float_list, "comma-separated Eb/N0 points (dB)"),
    Key("max_frames", "sweep", "max_frames", int, "frame cap per Eb/N0 point"),
    Key("target_block_errors", "sweep", "target_block_errors", int, "block errors that end a point"),
    Key("receiver", "sweep", "receiver", str, "classical, perfect-csi, dat, rdnla or transformer"),
    Key("checkpoint", "sweep", "checkpoint", _optional_str, "model checkpoint path"),
    Key("seed", "sweep", "seed", int, "seed of the sweep frame stream"),
    Key("output", "sweep", "output", _optional_str, "output CSV path (stdout if unset)"),
    Key("frames_per_chunk", "sweep", "frames_per_chunk", int, "frames simulated per chunk"),
    Key("workers", "sweep", "workers", int, "worker processes"),
    Key("coded", "sweep", "coded", _bool, "LDPC-coded link (false: uncoded bits)"),
    Key("decoder_iterations", "sweep", "decoder_iterations", int, "maximum min-sum iterations"),
    Key("record_wallclock", "run", "record_wallclock", _bool, "write measured seconds (false: write 0)"),
    # models
    Key("model", "model", "kind", str, "network to train: dat, rdnla or transformer"),
    Key("model_seed", "model", "seed", int, "weight initialisation seed"),
    Key("dat_width", "dat", "width", int, "DAT model width"),
    Key("dat_heads", "dat", "heads", int, "DAT attention heads"),
    Key("dat_blocks", "dat", "blocks", int, "DAT encoder blocks"),
    Key("dat_ffn_hidden", "dat", "ffn_hidden", int, "DAT feed-forward hidden width"),
    Key("dat_dropout", "dat", "dropout", float, "DAT dropout rate"),
    Key("dat_positional", "dat", "positional", str, "none, sinusoidal or learned"),
    Key("rdnla_channels", "rdnla", "channels", int, "RDNLA channels (even)"),
    Key("rdnla_stages", "rdnla", "stages", _str_list, "comma-separated prb/dnla body stages"),
    Key("rdnla_dropout", "rdnla", "dropout", float, "RDNLA dropout rate"),
    Key("rdnla_kernel_size", "rdnla", "kernel_size", int, "RDNLA conv kernel size (odd)"),
    Key("rdnla_residual_init_scale", "rdnla", "residual_init_scale", float, "init scale of residual-branch convs"),
    Key("rdnla_fuse_init_scale", "rdnla", "fuse_init_scale", float, "init scale of PRB fuse convs"),
)
KEYS_BY_NAME = {k.name: k for k in KEYS}


@dataclass(frozen=True)
class HarnessConfig:
    """Everything a subcommand may need, fully validated."""

    link: LinkConfig = field(default_factory=LinkConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    dat: DatConfig = field(default_factory=DatConfig)
    rdnla: RdnlaConfig = field(default_factory=RdnlaConfig)
    model: str = "dat"
    model_seed: int = 0
    metrics: str | None = None
    record_wallclock: bool = True

    def model_config(self, kind: str | None = None):
        kind = kind or self.model
        if kind == "rdnla":
            return self.rdnla
        if kind == "transformer":
            return replace(self.dat, use_dam=False)
        return self.dat


def build_config(values: dict[str, str]) -> HarnessConfig:
    """Validate raw ``key -> text`` pairs into a :class:`HarnessConfig`."""
    parsed: dict[str, dict[str, object]] = {}
    for name, text in values.items():
        key = KEYS_BY_NAME.get(name)
        if key is None:
            raise ConfigError(f"unknown configuration key {name!r}")
        try:
            value = key.parse(text)
        except ValueError as exc:
            raise ConfigError(f"{name}: invalid value {text!r} ({exc})") from None
        parsed.setdefault(key.section, {})[key.field] = (value, name)

    def section(cls, part: str, extra: dict | None = None):
        items = parsed.get(part, {})
        kwargs = {f: v for f, (v, _) in items.items()}
        kwargs.update(extra or {})
        try:
            return cls(**kwargs)
        except (ValueError, TypeError) as exc:
            names = ", ".join(sorted(n for _, n in items.values())) or part
            raise ConfigError(f"{names}: {exc}") from None

    run = parsed.get("run", {})
    wallclock = run.get("record_wallclock", (True, ""))[0]
    train_items = dict(parsed.get("train", {}))
    metrics = train_items.pop("metrics", (None, ""))[0]
    parsed["train"] = train_items
    model = parsed.get("model", {})
    kind = model.get("kind", ("dat", ""))[0]
    if kind not in ("dat", "rdnla", "transformer"):
        raise ConfigError(f"model: unknown network {kind!r}")
    receiver = parsed.get("sweep", {}).get("receiver", ("classical", ""))[0]
    if receiver not in ("classical", "perfect-csi", "dat", "rdnla", "transformer", "transformer-baseline"):
        raise ConfigError(f"receiver: unknown receiver {receiver!r}")
    return HarnessConfig(
        link=section(LinkConfig, "link"),
        train=section(TrainConfig, "train", {"record_wallclock": wallclock}),
        sweep=section(SweepConfig, "sweep", {"record_wallclock": wallclock}),
        dat=section(DatConfig, "dat"),
        rdnla=section(RdnlaConfig, "rdnla"),
        model=kind,
        model_seed=model.get("seed", (0, ""))[0],
        metrics=metrics,
        record_wallclock=wallclock,
    )


def read_config_values(path) -> dict[str, str]:
    """Raw ``key -> text`` pairs of a config file (duplicate keys are an error)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                       interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser["config"])


def parse_config(path=None, overrides: dict[str, str] | None = None) -> HarnessConfig:
    """Load ``path`` (defaults only if None) and apply ``overrides`` on top."""
    values = read_config_values(path) if path is not None else {}
    values.update(overrides or {})
    return build_config(values)


def format_config(cfg: HarnessConfig) -> str:
    """Render ``cfg`` back to the file format (every key, one per line)."""
    sources = {
        "link": cfg.link, "train": cfg.train, "sweep": cfg.sweep, "dat": cfg.dat, "rdnla": cfg.rdnla,
    }
    lines = []
    for key in KEYS:
        if key.section in sources:
            value = getattr(sources[key.section], key.field) if key.name != "metrics" else cfg.metrics
        elif key.section == "model":
            value = cfg.model if key.field == "kind" else cfg.model_seed
        else:
            value = cfg.record_wallclock
        if isinstance(value, (tuple, list)):
            text = ",".join(str(v) for v in value)
        elif value is None:
            text = ""
        else:
            text = str(value).lower() if isinstance(value, bool) else str(value)
        lines.append(f"{key.name} = {text}")
    return "\n".join(lines) + "\n"
