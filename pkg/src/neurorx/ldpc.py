"""Regular (3,6) LDPC codes with systematic encoding and normalized min-sum decoding.

All LLRs crossing this module's boundary follow ``log P(b=1)/P(b=0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

COLUMN_WEIGHT = 3
ROW_WEIGHT = 6


class CodeConstructionError(RuntimeError):
    """Raised when no acceptable parity-check matrix is found within the retry budget."""


@dataclass(frozen=True)
class LdpcCode:
    """Parity-check matrix plus the systematic encoder derived from it.

    Attributes:
        H: ``(m, n)`` uint8 parity-check matrix.
        info_cols: column positions that carry the message bits.
        parity_cols: remaining columns, in the order produced by ``P``.
        P: ``(k, m)`` uint8 matrix; parity bits are ``msg @ P mod 2``.
    """

    H: np.ndarray
    info_cols: np.ndarray
    parity_cols: np.ndarray
    P: np.ndarray

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def k(self) -> int:
        return len(self.info_cols)

    @property
    def rate(self) -> float:
        return self.k / self.n

    def syndrome(self, codewords: np.ndarray) -> np.ndarray:
        return (np.asarray(codewords, dtype=np.int64) @ self.H.T.astype(np.int64)) & 1


def _sample_regular(n: int, m: int, rng: np.random.Generator, cycle_passes: int = 50) -> np.ndarray:
    sockets = np.repeat(np.arange(n), COLUMN_WEIGHT)
    for _ in range(100):
        perm = rng.permutation(sockets)
        rows = perm.reshape(m, ROW_WEIGHT)
        if all(len(set(r)) == ROW_WEIGHT for r in rows):
            break
    else:
        raise CodeConstructionError("could not draw a regular matrix without repeated edges")
    H = np.zeros((m, n), dtype=np.uint8)
    H[np.repeat(np.arange(m), ROW_WEIGHT), rows.ravel()] = 1
    return _reduce_four_cycles(H, rng, cycle_passes)


def _reduce_four_cycles(H: np.ndarray, rng: np.random.Generator, passes: int) -> np.ndarray:
    """Break 4-cycles by swapping edge endpoints, which keeps both degree profiles."""
    H = H.copy()
    m, n = H.shape
    for _ in range(passes):
        overlap = H.astype(np.int32) @ H.T.astype(np.int32)
        np.fill_diagonal(overlap, 0)
        bad = np.argwhere(np.triu(overlap) > 1)
        if len(bad) == 0:
            break
        for r1, r2 in bad:
            shared = np.flatnonzero(H[r1] & H[r2])
            if len(shared) < 2:
                continue
            c1 = shared[0]
            # swap (r1, c1) with an edge (r3, c2) elsewhere
            r3 = int(rng.integers(m))
            candidates = np.flatnonzero(H[r3] & (1 - H[r1]))
            if r3 in (r1, r2) or len(candidates) == 0:
                continue
            c2 = int(rng.choice(candidates))
            if H[r3, c1]:
                continue
            H[r1, c1], H[r3, c2] = 0, 0
            H[r1, c2], H[r3, c1] = 1, 1
    return H


def _gf2_systematic(H: np.ndarray) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """Row-reduce ``H`` over GF(2).

    Returns ``(rank, pivot_cols, free_cols, R)`` where ``R`` is the reduced
    matrix restricted to its ``rank`` nonzero rows.
    """
    R = H.copy().astype(np.uint8)
    m, n = R.shape
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row == m:
            break
        hits = np.flatnonzero(R[row:, col]) + row
        if len(hits) == 0:
            continue
        pivot = hits[0]
        if pivot != row:
            R[[row, pivot]] = R[[pivot, row]]
        others = np.flatnonzero(R[:, col])
        others = others[others != row]
        R[others] ^= R[row]
        pivots.append(col)
        row += 1
    pivot_cols = np.array(pivots, dtype=np.int64)
    free_cols = np.setdiff1d(np.arange(n), pivot_cols)
    return row, pivot_cols, free_cols, R[:row]


def code_from_parity_matrix(H: np.ndarray) -> LdpcCode:
    """Derive the systematic encoder for an arbitrary binary parity-check matrix."""
    H = np.asarray(H, dtype=np.uint8)
    rank, pivot_cols, free_cols, R = _gf2_systematic(H)
    # in R, each pivot column is a unit vector; parity bit j = sum over free cols of R[j, free]
    P = R[:, free_cols].T.copy()
    return LdpcCode(H=H, info_cols=free_cols, parity_cols=pivot_cols, P=P)


def build_code(n: int, rate: float = 0.5, seed: int = 0, max_retries: int = 50) -> LdpcCode:
    """Seeded (3,6)-regular random LDPC code of length ``n`` with full-rank ``H``.

    Raises:
        ValueError: for unsupported ``n`` or ``rate``.
        CodeConstructionError: if no full-rank matrix is found in ``max_retries`` draws.
    """
    if abs(rate - 0.5) > 1e-9:
        raise ValueError(f"only rate-1/2 (3,6)-regular codes are supported, got rate {rate}")
    if n < 16 or n % 2:
        raise ValueError(f"code length must be even and >= 16, got {n}")
    m = n * COLUMN_WEIGHT // ROW_WEIGHT
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        try:
            H = _sample_regular(n, m, rng)
        except CodeConstructionError:
            continue
        code = code_from_parity_matrix(H)
        if code.k == n - m:
            return code
    raise CodeConstructionError(f"no full-rank (3,6) matrix of length {n} after {max_retries} attempts")


@lru_cache(maxsize=8)
def cached_code(n: int, rate: float, seed: int) -> LdpcCode:
    return build_code(n, rate, seed)


def encode(code: LdpcCode, msg: np.ndarray) -> np.ndarray:
    """Systematic encoding of ``(..., k)`` message bits to ``(..., n)`` codewords."""
    msg = np.asarray(msg)
    if msg.shape[-1] != code.k:
        raise ValueError(f"message length {msg.shape[-1]} != k = {code.k}")
    parity = (msg.astype(np.float32) @ code.P.astype(np.float32)).astype(np.int64) & 1
    out = np.empty(msg.shape[:-1] + (code.n,), dtype=np.uint8)
    out[..., code.info_cols] = msg
    out[..., code.parity_cols] = parity
    return out


def message_bits(code: LdpcCode, codewords: np.ndarray) -> np.ndarray:
    return np.asarray(codewords)[..., code.info_cols]


@dataclass
class DecodeResult:
    """Decoder output for a batch: hard message bits ``(..., k)``, codeword ``(..., n)``,
    per-word convergence flags and iteration counts."""

    bits: np.ndarray
    codeword: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray


class _Graph:
    def __init__(self, H: np.ndarray):
        rows, cols = np.nonzero(H)  # row-major: grouped by check
        self.m, self.n = H.shape
        self.edge_var = cols
        self.edge_chk = rows
        self.row_deg = np.bincount(rows, minlength=self.m)
        self.col_deg = np.bincount(cols, minlength=self.n)
        self.regular = bool(np.all(self.row_deg == self.row_deg[0]) and np.all(self.col_deg == self.col_deg[0]))
        # edges ordered by variable, for reshaping into (n, dv)
        self.by_var = np.argsort(cols, kind="stable")


def _graph(code: LdpcCode) -> _Graph:
    g = code.__dict__.get("_graph")
    if g is None:
        g = _Graph(code.H)
        object.__setattr__(code, "_graph", g)
    return g


def _variable_sums(c2v: np.ndarray, g: _Graph) -> np.ndarray:
    if g.regular:
        return c2v[:, g.by_var].reshape(c2v.shape[0], g.n, -1).sum(-1)
    out = np.zeros((c2v.shape[0], g.n))
    np.add.at(out, (slice(None), g.edge_var), c2v)
    return out


def _min_sum_rows(msgs: np.ndarray, alpha: float) -> np.ndarray:
    """Normalized min-sum over the last axis of ``(B, rows, deg)`` messages."""
    mag = np.abs(msgs)
    neg = msgs < 0
    sign_all = np.where(np.logical_xor.reduce(neg, axis=-1), -1.0, 1.0)[..., None]
    first = mag.argmin(axis=-1)[..., None]
    min1 = np.take_along_axis(mag, first, -1)
    np.put_along_axis(mag, first, np.inf, -1)
    min2 = mag.min(axis=-1, keepdims=True) if mag.shape[-1] > 1 else min1
    out = np.where(np.arange(mag.shape[-1]) == first, min2, min1)
    out *= sign_all
    out[neg] *= -1.0
    return alpha * out


def _check_update(v2c: np.ndarray, g: _Graph, alpha: float) -> np.ndarray:
    """Check-node update on check-ordered edge messages ``(B, E)``."""
    b = v2c.shape[0]
    if g.regular:
        return _min_sum_rows(v2c.reshape(b, g.m, -1), alpha).reshape(b, -1)
    out = np.empty_like(v2c)
    starts = np.concatenate([[0], np.cumsum(g.row_deg)])
    for r in range(g.m):
        out[:, starts[r]:starts[r + 1]] = _min_sum_rows(v2c[:, None, starts[r]:starts[r + 1]], alpha)[:, 0]
    return out


def _parity_ok(bits: np.ndarray, g: _Graph) -> np.ndarray:
    edge_bits = bits[:, g.edge_var]
    if g.regular:
        return ~np.any(np.logical_xor.reduce(edge_bits.reshape(len(bits), g.m, -1), axis=-1), axis=1)
    counts = np.zeros((len(bits), g.m), dtype=np.int64)
    np.add.at(counts, (slice(None), g.edge_chk), edge_bits)
    return ~np.any(counts & 1, axis=1)


def decode_bp(code: LdpcCode, llrs: np.ndarray, max_iters: int = 20, alpha: float = 0.75) -> DecodeResult:
    """Normalized min-sum decoding with per-word early termination.

    Args:
        llrs: ``(n,)`` or ``(B, n)`` channel LLRs, ``log P(1)/P(0)``.
        max_iters: message-passing iterations per word.
        alpha: check-node normalisation factor; 1.0 gives plain min-sum.

    A word counts as converged only if every parity check holds and no
    posterior LLR is exactly zero (a tie carries no decision).
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    single = llrs.ndim == 1
    if single:
        llrs = llrs[None]
    if llrs.shape[-1] != code.n:
        raise ValueError(f"expected {code.n} LLRs per word, got {llrs.shape[-1]}")
    if not np.all(np.isfinite(llrs)):
        raise ValueError("decoder input LLRs must be finite")
    g = _graph(code)
    batch = llrs.shape[0]
    channel = -llrs  # internal convention: positive favours bit 0

    c2v = np.zeros((batch, len(g.edge_var)))
    hard = (channel < 0).astype(np.uint8)
    converged = np.zeros(batch, dtype=bool)
    iterations = np.full(batch, max_iters, dtype=np.int64)
    active = np.arange(batch)

    for it in range(1, max_iters + 1):
        ch = channel[active]
        c2v_a = c2v[active]
        total = ch + _variable_sums(c2v_a, g)
        v2c = total[:, g.edge_var] - c2v_a
        c2v_a = _check_update(v2c, g, alpha)
        c2v[active] = c2v_a

        post = ch + _variable_sums(c2v_a, g)
        bits = post < 0
        hard[active] = bits
        ok = _parity_ok(bits, g) & ~np.any(post == 0, axis=1)
        done = active[ok]
        converged[done] = True
        iterations[done] = it
        active = active[~ok]
        if len(active) == 0:
            break

    result = DecodeResult(
        bits=hard[:, code.info_cols],
        codeword=hard,
        converged=converged,
        iterations=iterations,
    )
    if single:
        result = DecodeResult(result.bits[0], result.codeword[0], result.converged[0], result.iterations[0])
    return result


# ---------------------------------------------------------------------------
# alist I/O
# ---------------------------------------------------------------------------

def to_alist(H: np.ndarray) -> str:
    """Serialise a parity-check matrix in MacKay's alist text format."""
    H = np.asarray(H)
    m, n = H.shape
    col_sets = [np.flatnonzero(H[:, j]) + 1 for j in range(n)]
    row_sets = [np.flatnonzero(H[i]) + 1 for i in range(m)]
    max_col = max(len(c) for c in col_sets)
    max_row = max(len(r) for r in row_sets)
    lines = [f"{n} {m}", f"{max_col} {max_row}"]
    lines.append(" ".join(str(len(c)) for c in col_sets))
    lines.append(" ".join(str(len(r)) for r in row_sets))
    for c in col_sets:
        lines.append(" ".join(str(v) for v in list(c) + [0] * (max_col - len(c))))
    for r in row_sets:
        lines.append(" ".join(str(v) for v in list(r) + [0] * (max_row - len(r))))
    return "\n".join(lines) + "\n"


def from_alist(text: str) -> np.ndarray:
    tokens = [int(t) for t in text.split()]
    n, m = tokens[0], tokens[1]
    max_col = tokens[2]
    pos = 4 + n + m
    H = np.zeros((m, n), dtype=np.uint8)
    for j in range(n):
        for v in tokens[pos:pos + max_col]:
            if v:
                H[v - 1, j] = 1
        pos += max_col
    return H
