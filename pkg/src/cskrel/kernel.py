"""Subsequence kernels over generalized sequences.

gsk counts lambda-weighted common sparse subsequences of length n between two
sequences whose positions are symbol sets; a common subsequence picks one
strictly increasing index tuple per sequence and one shared symbol per
position, weighted lambda**(spread in s + spread in t) where spread is
last index - first index + 1.

csk restricts the count to subsequences that contain two given argument
tokens (so n >= 3 leaves room for at least one more token).  Both are
computed by dynamic programming over prefix grids; the per-prefix tables
satisfy first-order recurrences in each grid direction, evaluated here as
IIR filters (scipy.signal.lfilter) along the two axes.  Auxiliary tables
track, per prefix, the weighted mass of common subsequences containing the
first required token, the second, and both; they are zero at subsequence
length 0 and on empty prefixes, which makes the case updates uniform.

oracle_gsk / oracle_csk evaluate the defining sums by explicit enumeration
of index tuples and are the ground truth for the DP in tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .seqrep import GeneralizedToken, SequenceRepresentation, arg_symbol


@dataclass(frozen=True)
class KernelParams:
    lam: float = 0.9  # decay; weight is lam**(combined spread)
    n_prime: int = 4  # combine subsequence lengths 3..n_prime
    n: int | None = None  # single length, when one is meant

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lam must be in (0, 1]")
        if self.n_prime < 3:
            raise ValueError("n_prime must be >= 3")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be >= 1")


def common_count(x, y) -> int:
    """Number of symbols shared by two generalized tokens."""
    xs = x.symbols if isinstance(x, GeneralizedToken) else frozenset(x)
    ys = y.symbols if isinstance(y, GeneralizedToken) else frozenset(y)
    return len(xs & ys)


def _symseq(seq) -> tuple[frozenset, ...]:
    if isinstance(seq, SequenceRepresentation):
        return tuple(t.symbols for t in seq.tokens)
    out = []
    for e in seq:
        out.append(e.symbols if isinstance(e, GeneralizedToken) else frozenset(e))
    return tuple(out)


def _order_key(syms: tuple[frozenset, ...]):
    return tuple(tuple(sorted(fs)) for fs in syms)


@lru_cache(maxsize=8192)
def _positions(syms: tuple[frozenset, ...]) -> dict:
    """symbol -> sorted positions where it occurs."""
    pos: dict[str, list[int]] = {}
    for i, fs in enumerate(syms):
        for sym in fs:
            pos.setdefault(sym, []).append(i)
    return pos


def _common_matrix(syms_s, syms_t) -> np.ndarray:
    ps, pt = _positions(syms_s), _positions(syms_t)
    C = np.zeros((len(syms_s), len(syms_t)))
    for sym, rows in ps.items():
        cols = pt.get(sym)
        if cols:
            C[np.ix_(rows, cols)] += 1.0
    return C


def _arg_indicator(syms, a: int) -> np.ndarray:
    target = frozenset([arg_symbol(a)])
    return np.array([fs == target for fs in syms], dtype=float)


def _decay(x: np.ndarray, lam: float, axis: int) -> np.ndarray:
    # y[k] = x[k] + lam * y[k-1] along `axis`
    return lfilter([1.0], [1.0, -lam], x, axis=axis)


def _gsk_lengths(syms_s, syms_t, lengths: list[int], lam: float) -> np.ndarray:
    """Unconstrained kernel for every length in `lengths`, one DP sweep."""
    p, q = len(syms_s), len(syms_t)
    out = np.zeros(len(lengths))
    if p == 0 or q == 0:
        return out
    want = {n: k for k, n in enumerate(lengths)}
    maxn = max(lengths)
    C = _common_matrix(syms_s, syms_t)
    lam2 = lam * lam
    Kp = np.ones((p + 1, q + 1))  # K' at subsequence length 0
    for i in range(1, maxn + 1):
        if i in want:
            out[want[i]] = lam2 * float((C * Kp[:-1, :-1]).sum())
            if i == maxn:
                break
        U = np.zeros((p + 1, q + 1))
        U[1:, 1:] = lam2 * C * Kp[:-1, :-1]
        Kpp = _decay(U, lam, axis=1)
        Kp = _decay(Kpp, lam, axis=0)
    return out


def _csk_lengths(
    syms_s, syms_t, lengths: list[int], lam: float, pairs: list[tuple[int, int]]
) -> np.ndarray:
    """Constrained kernel values, shape (len(lengths), len(pairs)), one DP
    sweep covering all lengths and all argument pairs (pair-wise auxiliary
    tables are stacked on a leading axis)."""
    p, q = len(syms_s), len(syms_t)
    out = np.zeros((len(lengths), len(pairs)))
    if p == 0 or q == 0 or not pairs:
        return out

    # a pair can only contribute if both sequences hold both its tokens
    live = []
    for k, (a, b) in enumerate(pairs):
        sa, sb = _arg_indicator(syms_s, a), _arg_indicator(syms_s, b)
        ta, tb = _arg_indicator(syms_t, a), _arg_indicator(syms_t, b)
        if sa.any() and sb.any() and ta.any() and tb.any():
            live.append((k, sa, sb, ta, tb))
    if not live:
        return out

    P = len(live)
    C = _common_matrix(syms_s, syms_t)
    Ma = np.stack([sa[:, None] * ta[None, :] for _, sa, _, ta, _ in live])
    Mb = np.stack([sb[:, None] * tb[None, :] for _, _, sb, _, tb in live])
    CmA = C - Ma  # (1 - Ma) * C: argument tokens are singletons, so C=1 on Ma
    CmB = C - Mb
    CmAB = C - Ma - Mb
    lam2 = lam * lam
    want = {n: k for k, n in enumerate(lengths)}
    maxn = max(lengths)

    Kp = np.ones((p + 1, q + 1))
    aKp = np.zeros((P, p + 1, q + 1))
    bKp = np.zeros((P, p + 1, q + 1))
    abKp = np.zeros((P, p + 1, q + 1))
    for i in range(1, maxn + 1):
        KpIn = Kp[:-1, :-1]
        aIn, bIn, abIn = aKp[:, :-1, :-1], bKp[:, :-1, :-1], abKp[:, :-1, :-1]
        both = Ma * bIn + Mb * aIn + CmAB * abIn
        if i in want:
            vals = lam2 * both.sum(axis=(1, 2))
            for slot, (k, *_) in enumerate(live):
                out[want[i], k] = vals[slot]
            if i == maxn:
                break
        U = np.zeros((p + 1, q + 1))
        U[1:, 1:] = lam2 * C * KpIn
        Kp = _decay(_decay(U, lam, axis=1), lam, axis=0)
        Ua = np.zeros((P, p + 1, q + 1))
        Ua[:, 1:, 1:] = lam2 * (Ma * KpIn + CmA * aIn)
        aKp = _decay(_decay(Ua, lam, axis=2), lam, axis=1)
        Ub = np.zeros((P, p + 1, q + 1))
        Ub[:, 1:, 1:] = lam2 * (Mb * KpIn + CmB * bIn)
        bKp = _decay(_decay(Ub, lam, axis=2), lam, axis=1)
        Uab = np.zeros((P, p + 1, q + 1))
        Uab[:, 1:, 1:] = lam2 * both
        abKp = _decay(_decay(Uab, lam, axis=2), lam, axis=1)
    return out


def _canonical(syms_s, syms_t):
    """Order the two sequences deterministically so results are exactly
    symmetric in the arguments."""
    if _order_key(syms_t) < _order_key(syms_s):
        return syms_t, syms_s
    return syms_s, syms_t


def gsk(s, t, n: int, lam: float) -> float:
    """Lambda-weighted count of common sparse subsequences of length n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    syms_s, syms_t = _canonical(_symseq(s), _symseq(t))
    return float(_gsk_lengths(syms_s, syms_t, [n], lam)[0])


def csk(s, t, n: int, lam: float, a: int, b: int) -> float:
    """gsk restricted to subsequences containing argument tokens a and b."""
    if n < 3:
        raise ValueError("n must be >= 3 (a constrained subsequence needs room"
                         " for a token besides the two argument tokens)")
    if a == b:
        raise ValueError("the two argument token indices must differ")
    if a < 1 or b < 1:
        raise ValueError("argument token indices are 1-based")
    syms_s, syms_t = _canonical(_symseq(s), _symseq(t))
    return float(_csk_lengths(syms_s, syms_t, [n], lam, [(a, b)])[0, 0])


def _all_pairs(N: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(1, N + 1), 2))


def _infer_arity(s, t, N) -> int:
    if N is None:
        for x in (s, t):
            if isinstance(x, SequenceRepresentation):
                return x.arity
        raise ValueError("N (arity) required for raw sequences")
    return N


def csk_pairsum(s, t, n: int, lam: float, N: int | None = None) -> float:
    """Constrained kernel summed over all argument-index pairs i < j."""
    N = _infer_arity(s, t, N)
    syms_s, syms_t = _canonical(_symseq(s), _symseq(t))
    vals = _csk_lengths(syms_s, syms_t, [n], lam, _all_pairs(N))
    return float(vals.sum())


def _pairsum_lengths(syms_s, syms_t, lengths, lam, N) -> np.ndarray:
    syms_s, syms_t = _canonical(syms_s, syms_t)
    return _csk_lengths(syms_s, syms_t, lengths, lam, _all_pairs(N)).sum(axis=1)


def ncsk(s, t, n: int, lam: float, N: int | None = None) -> float:
    """Cosine-normalized pair-summed kernel; 0 when either self-kernel is 0,
    exactly 1 for content-identical sequences with positive self-kernel."""
    N = _infer_arity(s, t, N)
    syms_s, syms_t = _symseq(s), _symseq(t)
    ss = float(_pairsum_lengths(syms_s, syms_s, [n], lam, N)[0])
    if syms_s == syms_t:
        return 1.0 if ss > 0.0 else 0.0
    tt = float(_pairsum_lengths(syms_t, syms_t, [n], lam, N)[0])
    if ss == 0.0 or tt == 0.0:
        return 0.0
    st = float(_pairsum_lengths(syms_s, syms_t, [n], lam, N)[0])
    return st / np.sqrt(ss * tt)


def _combine(cross: np.ndarray, self_s: np.ndarray, self_t: np.ndarray,
             lengths: list[int], n_prime: int) -> float:
    weights = np.array([2.0 ** (n_prime - k) for k in lengths])
    denom = np.sqrt(self_s * self_t)
    ok = denom > 0.0
    normed = np.zeros(len(lengths))
    normed[ok] = cross[ok] / denom[ok]
    return float((weights * normed).sum() / weights.sum())


def csk_final(s, t, lam: float = 0.9, n_prime: int = 4, N: int | None = None) -> float:
    """Weighted combination of normalized kernels for lengths 3..n_prime,
    length k carrying weight 2**(n_prime - k)."""
    if n_prime < 3:
        raise ValueError("n_prime must be >= 3")
    N = _infer_arity(s, t, N)
    lengths = list(range(3, n_prime + 1))
    syms_s, syms_t = _symseq(s), _symseq(t)
    self_s = _pairsum_lengths(syms_s, syms_s, lengths, lam, N)
    if syms_s == syms_t:
        weights = np.array([2.0 ** (n_prime - k) for k in lengths])
        return float((weights * (self_s > 0.0)).sum() / weights.sum())
    self_t = _pairsum_lengths(syms_t, syms_t, lengths, lam, N)
    cross = _pairsum_lengths(syms_s, syms_t, lengths, lam, N)
    return _combine(cross, self_s, self_t, lengths, n_prime)


# --- Gram matrix ------------------------------------------------------------

_POOL_STATE: dict = {}


def _pool_init(syms_list, selfs, lengths, lam, N, n_prime):
    _POOL_STATE.update(
        syms=syms_list, selfs=selfs, lengths=lengths, lam=lam, N=N, n_prime=n_prime
    )


def _pool_cell(pair):
    ui, uj = pair
    st = _POOL_STATE
    cross = _pairsum_lengths(st["syms"][ui], st["syms"][uj], st["lengths"],
                             st["lam"], st["N"])
    return ui, uj, _combine(cross, st["selfs"][ui], st["selfs"][uj],
                            st["lengths"], st["n_prime"])


def gram_matrix(seqs, params: KernelParams = KernelParams(),
                workers: int | None = None, N: int | None = None) -> np.ndarray:
    """Symmetric matrix of csk_final values over the sequences.

    Identical sequences (by content) are computed once; each unordered pair
    is evaluated once and mirrored, so the result is exactly symmetric.
    `workers` > 1 distributes pair evaluation over a process pool.
    """
    if not seqs:
        return np.zeros((0, 0))
    arities = {s.arity for s in seqs if isinstance(s, SequenceRepresentation)}
    if len(arities) > 1:
        raise ValueError(f"sequences have mixed arities {sorted(arities)}")
    if N is None:
        if not arities:
            raise ValueError("N (arity) required for raw sequences")
        N = arities.pop()
    lengths = list(range(3, params.n_prime + 1))

    syms_list: list[tuple[frozenset, ...]] = []
    u_of = []
    index: dict = {}
    for s in seqs:
        syms = _symseq(s)
        if syms not in index:
            index[syms] = len(syms_list)
            syms_list.append(syms)
        u_of.append(index[syms])

    nu = len(syms_list)
    selfs = [_pairsum_lengths(sy, sy, lengths, params.lam, N) for sy in syms_list]
    weights = np.array([2.0 ** (params.n_prime - k) for k in lengths])
    G = np.zeros((nu, nu))
    for ui in range(nu):
        G[ui, ui] = float((weights * (selfs[ui] > 0.0)).sum() / weights.sum())

    tasks = [(ui, uj) for ui in range(nu) for uj in range(ui + 1, nu)]
    if workers and workers > 1 and len(tasks) > 1:
        import multiprocessing as mp

        with mp.Pool(
            workers,
            initializer=_pool_init,
            initargs=(syms_list, selfs, lengths, params.lam, N, params.n_prime),
        ) as pool:
            results = pool.map(_pool_cell, tasks, chunksize=64)
    else:
        _pool_init(syms_list, selfs, lengths, params.lam, N, params.n_prime)
        results = [_pool_cell(t) for t in tasks]
    for ui, uj, val in results:
        G[ui, uj] = G[uj, ui] = val

    idx = np.array(u_of)
    return G[np.ix_(idx, idx)]


# --- Enumeration oracles ----------------------------------------------------

_ORACLE_MAX_LEN = 12


def _oracle_guard(p: int, q: int):
    if p > _ORACLE_MAX_LEN or q > _ORACLE_MAX_LEN:
        raise ValueError(f"oracle limited to sequences of length <= {_ORACLE_MAX_LEN}")


def oracle_gsk(s, t, n: int, lam: float) -> float:
    """Direct enumeration of the defining sum of gsk (exponential)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    syms_s, syms_t = _symseq(s), _symseq(t)
    p, q = len(syms_s), len(syms_t)
    _oracle_guard(p, q)
    if n > p or n > q:
        return 0.0
    C = _common_matrix(syms_s, syms_t)
    I = np.array(list(itertools.combinations(range(p), n)))
    J = np.array(list(itertools.combinations(range(q), n)))
    prod = C[I[:, None, :], J[None, :, :]].prod(axis=2)
    ws = lam ** (I[:, -1] - I[:, 0] + 1)
    wt = lam ** (J[:, -1] - J[:, 0] + 1)
    return float((ws[:, None] * wt[None, :] * prod).sum())


def oracle_csk(s, t, n: int, lam: float, a: int, b: int) -> float:
    """Direct enumeration of the defining sum of csk (exponential)."""
    if n < 3:
        raise ValueError("n must be >= 3")
    if a == b:
        raise ValueError("the two argument token indices must differ")
    syms_s, syms_t = _symseq(s), _symseq(t)
    p, q = len(syms_s), len(syms_t)
    _oracle_guard(p, q)
    if n > p or n > q:
        return 0.0
    C = _common_matrix(syms_s, syms_t)
    sa, sb = _arg_indicator(syms_s, a) > 0, _arg_indicator(syms_s, b) > 0
    ta, tb = _arg_indicator(syms_t, a) > 0, _arg_indicator(syms_t, b) > 0
    I = np.array(list(itertools.combinations(range(p), n)))
    J = np.array(list(itertools.combinations(range(q), n)))
    prod = C[I[:, None, :], J[None, :, :]].prod(axis=2)
    # a common subsequence contains token a iff some picked position pair is
    # the a-token in both sequences (argument tokens are singleton symbols)
    has_a = np.any(sa[I][:, None, :] & ta[J][None, :, :], axis=2)
    has_b = np.any(sb[I][:, None, :] & tb[J][None, :, :], axis=2)
    ws = lam ** (I[:, -1] - I[:, 0] + 1)
    wt = lam ** (J[:, -1] - J[:, 0] + 1)
    return float((ws[:, None] * wt[None, :] * prod * has_a * has_b).sum())
