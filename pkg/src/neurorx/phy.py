"""OFDM resource grids, Gray QAM, block-fading channel and noise bookkeeping.

Grids are complex arrays laid out ``(..., n_sym, n_sc, n_rx)``; transmit
grids drop the antenna axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class LinkConfig:
    """OFDM link parameters.

    The defaults reproduce the evaluated setup: 14 symbols x 76 subcarriers,
    two receive antennas, two pilot symbols, rate-1/2 coding.

    ``tap_decay`` is the e-folding length (in taps) of the exponential
    power-delay profile and ``fft_size`` sets the tap spacing relative to
    the subcarrier spacing. ``pilot_sequence`` is ``"constant"`` (the same
    unit-modulus QPSK symbol on every pilot RE) or ``"qpsk"`` (seeded random
    QPSK symbols per subcarrier).
    ``code_seed`` selects the LDPC code instance. ``cp_length`` is carried
    for bookkeeping only: the channel acts per subcarrier, so no time-domain
    processing (and no cyclic prefix) is simulated.
    """

    n_sym: int = 14
    n_sc: int = 76
    n_rx: int = 2
    bits_per_symbol: int = 2
    pilot_symbols: tuple[int, ...] = (2, 11)
    code_rate: float = 0.5
    channel: str = "rayleigh"
    n_taps: int = 16
    tap_decay: float = 16.0
    fft_size: int = 96
    pilot_sequence: str = "constant"
    pilot_seed: int = 1
    cp_length: int = 6
    code_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pilot_symbols", tuple(int(k) for k in self.pilot_symbols))
        if min(self.n_sym, self.n_sc, self.n_rx) < 1:
            raise ValueError("n_sym, n_sc and n_rx must be positive")
        if self.bits_per_symbol not in (2, 4, 6):
            raise ValueError(f"bits_per_symbol must be 2, 4 or 6, got {self.bits_per_symbol}")
        if not self.pilot_symbols:
            raise ValueError("at least one pilot symbol is required")
        if len(set(self.pilot_symbols)) != len(self.pilot_symbols):
            raise ValueError("pilot_symbols must be distinct")
        if any(not 0 <= k < self.n_sym for k in self.pilot_symbols):
            raise ValueError(f"pilot_symbols {self.pilot_symbols} must lie in [0, {self.n_sym})")
        if len(self.pilot_symbols) >= self.n_sym:
            raise ValueError("no OFDM symbols left for data")
        if not 0.0 < self.code_rate < 1.0:
            raise ValueError(f"code_rate must lie in (0, 1), got {self.code_rate}")
        if self.channel not in ("rayleigh", "awgn"):
            raise ValueError(f"channel must be 'rayleigh' or 'awgn', got {self.channel!r}")
        if self.n_taps < 1 or self.tap_decay <= 0 or self.fft_size < 1:
            raise ValueError("n_taps, tap_decay and fft_size must be positive")
        if self.pilot_sequence not in ("qpsk", "constant"):
            raise ValueError(f"pilot_sequence must be 'qpsk' or 'constant', got {self.pilot_sequence!r}")
        if self.cp_length < 0:
            raise ValueError("cp_length must be non-negative")

    @property
    def data_symbols(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.n_sym) if k not in self.pilot_symbols)

    @property
    def n_data_re(self) -> int:
        return len(self.data_symbols) * self.n_sc

    @property
    def n_coded_bits(self) -> int:
        return self.n_data_re * self.bits_per_symbol

    @property
    def n_features(self) -> int:
        return 2 * self.n_rx + 1

    @property
    def data_mask(self) -> np.ndarray:
        """Boolean ``(n_sym, n_sc)`` grid that is True on data resource elements."""
        mask = np.ones((self.n_sym, self.n_sc), dtype=bool)
        mask[list(self.pilot_symbols), :] = False
        return mask


# ---------------------------------------------------------------------------
# QAM
# ---------------------------------------------------------------------------

def _pam_levels(bits_per_axis: int) -> np.ndarray:
    """Gray PAM amplitude indexed by the integer value of the axis bits (MSB first).

    The first bit selects the sign (0 -> positive); position ``p`` counted
    from the most positive level carries Gray label ``p ^ (p >> 1)``.
    """
    m = 1 << bits_per_axis
    levels = np.empty(m)
    for p in range(m):
        levels[p ^ (p >> 1)] = m - 1 - 2 * p
    return levels


@lru_cache(maxsize=None)
def constellation(bits_per_symbol: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-energy Gray square QAM.

    Returns:
        ``(points, labels)``: complex points of shape ``(M,)`` and their bit
        labels of shape ``(M, bits_per_symbol)``; point ``i`` carries the
        binary expansion of ``i`` (MSB first). The first half of the label
        drives the in-phase axis.
    """
    if bits_per_symbol not in (2, 4, 6):
        raise ValueError(f"bits_per_symbol must be 2, 4 or 6, got {bits_per_symbol}")
    half = bits_per_symbol // 2
    levels = _pam_levels(half)
    m_axis = 1 << half
    idx = np.arange(1 << bits_per_symbol)
    points = levels[idx >> half] + 1j * levels[idx & (m_axis - 1)]
    points = points / np.sqrt(2 * (m_axis ** 2 - 1) / 3)
    labels = (idx[:, None] >> np.arange(bits_per_symbol - 1, -1, -1)) & 1
    points.flags.writeable = False
    labels.flags.writeable = False
    return points, labels.astype(np.int8)


def map_bits_to_qam(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Map a bit array (last axis) to Gray QAM symbols.

    Raises:
        ValueError: if the last-axis length is not a multiple of ``bits_per_symbol``.
    """
    bits = np.asarray(bits)
    if bits.shape[-1] % bits_per_symbol:
        raise ValueError(f"{bits.shape[-1]} bits cannot be split into groups of {bits_per_symbol}")
    points, _ = constellation(bits_per_symbol)
    groups = bits.reshape(*bits.shape[:-1], -1, bits_per_symbol).astype(np.int64)
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1)
    return points[groups @ weights]


# ---------------------------------------------------------------------------
# Resource grid
# ---------------------------------------------------------------------------

def pilot_values(cfg: LinkConfig) -> np.ndarray:
    """Known pilot symbols, shape ``(len(pilot_symbols), n_sc)``, unit modulus."""
    shape = (len(cfg.pilot_symbols), cfg.n_sc)
    if cfg.pilot_sequence == "constant":
        return np.full(shape, (1 + 1j) / np.sqrt(2))
    rng = np.random.default_rng(cfg.pilot_seed)
    bits = rng.integers(0, 2, size=(*shape, 2))
    return map_bits_to_qam(bits.reshape(*shape[:-1], -1), 2).reshape(shape)


def build_tx_grid(data_symbols: np.ndarray, pilots: np.ndarray, cfg: LinkConfig) -> np.ndarray:
    """Place pilots and data on the ``(n_sym, n_sc)`` grid (leading batch axes allowed).

    Data fills non-pilot resource elements in row-major (symbol, subcarrier) order.

    Raises:
        ValueError: if the number of data symbols does not match the free REs.
    """
    data_symbols = np.asarray(data_symbols)
    if data_symbols.shape[-1] != cfg.n_data_re:
        raise ValueError(f"expected {cfg.n_data_re} data symbols, got {data_symbols.shape[-1]}")
    pilots = np.asarray(pilots)
    if pilots.shape != (len(cfg.pilot_symbols), cfg.n_sc):
        raise ValueError(f"pilots must have shape {(len(cfg.pilot_symbols), cfg.n_sc)}, got {pilots.shape}")
    lead = data_symbols.shape[:-1]
    grid = np.zeros((*lead, cfg.n_sym, cfg.n_sc), dtype=complex)
    grid[..., list(cfg.data_symbols), :] = data_symbols.reshape(*lead, len(cfg.data_symbols), cfg.n_sc)
    grid[..., list(cfg.pilot_symbols), :] = pilots
    return grid


def extract_data(grid: np.ndarray, cfg: LinkConfig) -> np.ndarray:
    """Inverse of :func:`build_tx_grid` for the data part: ``(..., n_data_re[, extra])``."""
    sel = grid[..., list(cfg.data_symbols), :] if grid.shape[-2:] == (cfg.n_sym, cfg.n_sc) else None
    if sel is not None:
        return sel.reshape(*grid.shape[:-2], cfg.n_data_re)
    sel = grid[..., list(cfg.data_symbols), :, :]
    return sel.reshape(*grid.shape[:-3], cfg.n_data_re, grid.shape[-1])


def extract_pilots(grid: np.ndarray, cfg: LinkConfig) -> np.ndarray:
    """Pilot rows of a ``(..., n_sym, n_sc[, n_rx])`` grid."""
    if grid.shape[-2:] == (cfg.n_sym, cfg.n_sc):
        return grid[..., list(cfg.pilot_symbols), :]
    return grid[..., list(cfg.pilot_symbols), :, :]


# ---------------------------------------------------------------------------
# Channel
# ---------------------------------------------------------------------------

@dataclass
class ChannelRealization:
    """Frequency-domain gains ``h`` of shape ``(..., n_sym, n_sc, n_rx)`` plus noise variance.

    ``n0`` is the total complex noise variance per resource element
    (``E|n|^2 = n0``), scalar or one value per leading batch entry.
    """

    h: np.ndarray
    n0: np.ndarray | float = field(default=0.0)


def power_delay_profile(cfg: LinkConfig) -> np.ndarray:
    """Exponential PDP over ``n_taps`` taps, normalised to unit total power."""
    p = np.exp(-np.arange(cfg.n_taps) / cfg.tap_decay)
    return p / p.sum()


class RayleighBlockFading:
    """L-tap exponential-PDP Rayleigh channel, constant over the frame.

    Each receive antenna gets independent complex Gaussian taps; the
    frequency response on subcarrier ``s`` is ``sum_l g_l exp(-2j pi s l / fft_size)``.
    Any object with the same ``sample(batch, rng)`` method can stand in.
    """

    def __init__(self, cfg: LinkConfig):
        self.cfg = cfg
        self.pdp = power_delay_profile(cfg)
        s = np.arange(cfg.n_sc)
        l = np.arange(cfg.n_taps)
        self._dft = np.exp(-2j * np.pi * np.outer(l, s) / cfg.fft_size)  # (L, n_sc)

    def sample(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        cfg = self.cfg
        shape = (batch, cfg.n_rx, cfg.n_taps)
        taps = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(self.pdp / 2)
        h = taps @ self._dft  # (B, n_rx, n_sc)
        h = h.transpose(0, 2, 1)[:, None, :, :]
        return np.broadcast_to(h, (batch, cfg.n_sym, cfg.n_sc, cfg.n_rx)).copy()


class FlatUnitChannel:
    """AWGN-only channel: ``h == 1`` everywhere."""

    def __init__(self, cfg: LinkConfig):
        self.cfg = cfg

    def sample(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        cfg = self.cfg
        return np.ones((batch, cfg.n_sym, cfg.n_sc, cfg.n_rx), dtype=complex)


def channel_model(cfg: LinkConfig):
    return RayleighBlockFading(cfg) if cfg.channel == "rayleigh" else FlatUnitChannel(cfg)


def gen_channel(cfg: LinkConfig, rng: np.random.Generator, batch: int | None = None, n0=0.0) -> ChannelRealization:
    """Draw one (``batch=None``) or ``batch`` channel realizations."""
    h = channel_model(cfg).sample(1 if batch is None else batch, rng)
    return ChannelRealization(h=h[0] if batch is None else h, n0=n0)


def complex_noise(shape, n0, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian noise with total variance ``n0`` (``n0/2`` per real dimension).

    ``n0`` may be a scalar or broadcast against the leading axes of ``shape``.
    """
    n0 = np.asarray(n0, dtype=float)
    if np.any(n0 < 0):
        raise ValueError("noise variance must be non-negative")
    scale = np.sqrt(n0 / 2).reshape(n0.shape + (1,) * (len(shape) - n0.ndim))
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * scale


def apply_channel(x: np.ndarray, ch: ChannelRealization, rng: np.random.Generator) -> np.ndarray:
    """``y = h * x + n`` per receive antenna.

    Args:
        x: transmit grid ``(..., n_sym, n_sc)``.
        ch: gains ``(..., n_sym, n_sc, n_rx)`` and noise variance.
    """
    x = np.asarray(x)
    if ch.h.shape[:-1] != x.shape[-2:] and ch.h.shape[:-1] != x.shape:
        raise ValueError(f"channel shape {ch.h.shape} does not match grid {x.shape}")
    y = ch.h * x[..., None]
    n0 = np.asarray(ch.n0, dtype=float)
    if np.any(n0 < 0):
        raise ValueError("noise variance must be non-negative")
    if np.any(n0 > 0):
        y = y + complex_noise(y.shape, n0, rng)
    return y


def ebn0_db_to_n0(ebn0_db, cfg: LinkConfig, coded: bool = True):
    """Noise variance for a given Eb/N0 with unit symbol energy.

    ``N0 = 1 / (10^(Eb/N0 / 10) * R * bits_per_symbol)`` where ``R`` is the code
    rate, or 1 for an uncoded link. Pilot overhead is not charged.
    """
    rate = cfg.code_rate if coded else 1.0
    return 1.0 / (10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0) * rate * cfg.bits_per_symbol)
