"""Binary classifiers over candidate relation instances.

train_svm solves the weighted soft-margin dual on a precomputed Gram matrix
with a maximal-violating-pair working-set strategy; train_maxent fits an
L2-regularized logistic model on sparse feature vectors by L-BFGS with an
analytic gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import expit

from .candidates import CandidateRelationInstance, minimal_span
from .corpus import AliasGroups, Document
from .kernel import KernelParams, csk_final
from .seqrep import SequenceRepresentation

BIAS_FEATURE = "__bias__"

_EPS_ACTIVE = 1e-12  # slack for box-boundary membership tests
_EPS_FREE = 1e-8  # slack for "strictly inside the box" when estimating bias


def class_balance_weights(labels) -> np.ndarray:
    """Weight 1 per negative, (#neg / #pos) per positive, so the two class
    weight sums are equal."""
    y = np.asarray([bool(l) for l in labels])
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    w = np.ones(len(y))
    w[y] = n_neg / n_pos
    return w


@dataclass
class SvmModel:
    alpha: np.ndarray  # dual variables, full training length
    coef: np.ndarray  # alpha * y restricted to support indices
    support: np.ndarray  # indices of nonzero dual variables
    b: float
    C: float
    params: KernelParams
    converged: bool
    n_iter: int
    objective: np.ndarray = field(repr=False, default=None)
    support_sequences: tuple[SequenceRepresentation, ...] | None = None


def _up_low_masks(y, alpha, U):
    up = ((y > 0) & (alpha < U - _EPS_ACTIVE)) | ((y < 0) & (alpha > _EPS_ACTIVE))
    low = ((y < 0) & (alpha < U - _EPS_ACTIVE)) | ((y > 0) & (alpha > _EPS_ACTIVE))
    return up, low


def kkt_violation(gram, labels, weights, C, alpha) -> float:
    """Maximal-violating-pair gap at the given dual point (<= tol at a
    solution)."""
    K = np.asarray(gram, dtype=float)
    y = np.where(np.asarray([bool(l) for l in labels]), 1.0, -1.0)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    U = C * w
    G = K @ (alpha * y)
    F = G - y
    up, low = _up_low_masks(y, alpha, U)
    if not up.any() or not low.any():
        return 0.0
    return float(F[low].max() - F[up].min())


def train_svm(
    gram,
    labels,
    weights=None,
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    sequences=None,
    params: KernelParams = KernelParams(),
) -> SvmModel:
    """Fit the dual SVM on a precomputed kernel matrix.

    Each step updates the maximal violating pair; iteration stops when the
    KKT gap drops below tol or at max_iter (converged flag reports which).
    Per-instance boxes are C * weight.  The dual objective is tracked and
    asserted non-decreasing when assertions are enabled.
    """
    K = np.asarray(gram, dtype=float)
    n = K.shape[0]
    if K.shape != (n, n) or n != len(labels):
        raise ValueError("gram must be square and match labels")
    if not K.any():
        raise ValueError("degenerate gram matrix (all zeros)")
    y = np.where(np.asarray([bool(l) for l in labels]), 1.0, -1.0)
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("both classes must be present")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    U = C * w

    alpha = np.zeros(n)
    G = np.zeros(n)  # sum_j alpha_j y_j K_ij
    objective = [0.0]
    converged = False
    it = 0
    while it < max_iter:
        F = G - y
        up, low = _up_low_masks(y, alpha, U)
        if not up.any() or not low.any():
            converged = True
            break
        up_idx = np.flatnonzero(up)
        low_idx = np.flatnonzero(low)
        i = up_idx[np.argmin(F[up_idx])]
        j = low_idx[np.argmax(F[low_idx])]
        if F[j] - F[i] <= tol:
            converged = True
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        eta = max(eta, 1e-12)
        delta = (F[j] - F[i]) / eta
        # clip to the boxes of both coordinates
        room_i = U[i] - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else U[j] - alpha[j]
        delta = min(delta, room_i, room_j)
        if delta <= 0.0:
            break
        alpha[i] = min(max(alpha[i] + y[i] * delta, 0.0), U[i])
        alpha[j] = min(max(alpha[j] - y[j] * delta, 0.0), U[j])
        G += delta * (K[:, i] - K[:, j])
        objective.append(float(alpha.sum() - 0.5 * np.dot(alpha * y, G)))
        if __debug__:
            assert objective[-1] >= objective[-2] - 1e-8 * (1.0 + abs(objective[-1])), (
                "dual objective decreased"
            )
        it += 1

    F = G - y
    free = (alpha > _EPS_FREE) & (alpha < U - _EPS_FREE)
    if free.any():
        b = float(-F[free].mean())
    else:
        up, low = _up_low_masks(y, alpha, U)
        lo = F[up].min() if up.any() else F.min()
        hi = F[low].max() if low.any() else F.max()
        b = float(-(lo + hi) / 2.0)

    support = np.flatnonzero(alpha > 1e-10)
    model = SvmModel(
        alpha=alpha,
        coef=(alpha * y)[support],
        support=support,
        b=b,
        C=C,
        params=params,
        converged=converged,
        n_iter=it,
        objective=np.array(objective),
    )
    if sequences is not None:
        model.support_sequences = tuple(sequences[i] for i in support)
    return model


def decision_values(model: SvmModel, gram_rows: np.ndarray) -> np.ndarray:
    """Scores for instances whose kernel values to the support vectors form
    the rows of gram_rows (columns ordered like model.support)."""
    return gram_rows @ model.coef + model.b


def predict_svm(model: SvmModel, seq: SequenceRepresentation) -> tuple[float, bool]:
    """Score one sequence against the stored support sequences."""
    if model.support_sequences is None:
        raise ValueError("model carries no support sequences")
    if model.support_sequences and model.support_sequences[0].arity != seq.arity:
        raise ValueError("sequence arity does not match the trained model")
    k = np.array(
        [
            csk_final(sv, seq, model.params.lam, model.params.n_prime)
            for sv in model.support_sequences
        ]
    )
    score = float(k @ model.coef + model.b)
    return score, score > 0.0


# --- MaxEnt -----------------------------------------------------------------


@dataclass
class MaxEntModel:
    feature_index: dict[str, int]
    weights: np.ndarray
    l2: float


def design_matrix(fvs, feature_index) -> sp.csr_matrix:
    """Sparse design matrix; the bias feature is an always-on column."""
    rows, cols, vals = [], [], []
    bias_col = feature_index[BIAS_FEATURE]
    for r, fv in enumerate(fvs):
        for name, value in fv.items():
            c = feature_index.get(name)
            if c is not None and c != bias_col:
                rows.append(r)
                cols.append(c)
                vals.append(float(value))
        rows.append(r)
        cols.append(bias_col)
        vals.append(1.0)
    return sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(fvs), len(feature_index))
    )


def nll_and_grad(X, y, w, l2, theta):
    """Weighted negative log-likelihood with L2 penalty, and its gradient."""
    z = X @ theta
    nll = float(np.dot(w, np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(theta, theta))
    p = expit(z)
    grad = X.T @ (w * (p - y)) + l2 * theta
    return nll, np.asarray(grad).ravel()


def train_maxent(
    fvs,
    labels,
    weights=None,
    l2: float = 1.0,
    gtol: float = 1e-5,
    max_iter: int = 1000,
) -> MaxEntModel:
    """Fit L2-regularized logistic regression from zero initialization.

    Convex, so the optimum is independent of data order; L-BFGS stops when
    the projected-gradient max-norm drops below gtol.
    """
    y = np.asarray([bool(l) for l in labels], dtype=float)
    if y.all() or not y.any():
        raise ValueError("both classes must be present")
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    names = sorted({name for fv in fvs for name in fv})
    feature_index = {name: i for i, name in enumerate(names + [BIAS_FEATURE])}
    X = design_matrix(fvs, feature_index)
    res = minimize(
        lambda th: nll_and_grad(X, y, w, l2, th),
        np.zeros(len(feature_index)),
        jac=True,
        method="L-BFGS-B",
        options={"gtol": gtol, "ftol": 1e-14, "maxiter": max_iter},
    )
    return MaxEntModel(feature_index, res.x, l2)


def predict_maxent(model: MaxEntModel, fv) -> tuple[float, bool]:
    """Positive-class probability and 0.5-thresholded label; unseen features
    are ignored."""
    z = model.weights[model.feature_index[BIAS_FEATURE]]
    for name, value in fv.items():
        idx = model.feature_index.get(name)
        if idx is not None and name != BIAS_FEATURE:
            z += model.weights[idx] * float(value)
    p = float(expit(z))
    return p, p >= 0.5


# --- Feature extraction -----------------------------------------------------


def extract_features(
    candidate: CandidateRelationInstance,
    doc: Document,
    seq: SequenceRepresentation,
    alias_groups: AliasGroups,
) -> dict[str, float]:
    """Explicit features of one candidate and its sequence representation.

    TupleSpan is the minimal span in sentences.  Per argument pair (i, j):
    SentDiff_ij is the minimum number of sequence lines (break-token counts)
    separating their tokens, SameLine_ij flags co-occurrence on one line, and
    exactly one of E_iE_jOE_t / E_iE_jNoOE_t fires per entity type t of the
    pair, depending on whether an other-entity token of that type occurs
    strictly between some occurrences of the two argument tokens.  Every word
    and cluster id in the sequence contributes a boolean feature.
    """
    fv: dict[str, float] = {"TupleSpan": float(minimal_span(candidate, doc, alias_groups))}

    line = 0
    arg_positions: dict[int, list[int]] = {}
    arg_lines: dict[int, list[int]] = {}
    oe_positions: dict[str, list[int]] = {}
    for pos, tok in enumerate(seq.tokens):
        kind = tok.kind
        if kind == "sb":
            line += 1
        elif kind == "arg":
            arg_positions.setdefault(tok.arg_index, []).append(pos)
            arg_lines.setdefault(tok.arg_index, []).append(line)
        elif kind == "other":
            et = next(iter(tok.symbols))[3:]
            oe_positions.setdefault(et, []).append(pos)
        else:
            for sym in sorted(tok.symbols):
                if sym.startswith("W:"):
                    fv["W_" + sym[2:]] = 1.0
                elif sym.startswith("C:"):
                    fv["C_" + sym[2:]] = 1.0

    types_by_entity = {m.entity_id: m.entity_type for m in doc.mentions}
    arg_types = [types_by_entity[eid] for eid in candidate.arg_entity_ids]

    n = candidate.arity
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            li, lj = arg_lines.get(i, []), arg_lines.get(j, [])
            diff = min(abs(a - b) for a in li for b in lj)
            fv[f"SentDiff_{i}{j}"] = float(diff)
            fv[f"SameLine_{i}{j}"] = 1.0 if diff == 0 else 0.0
            pos_ij = arg_positions[i] + arg_positions[j]
            lo, hi = min(pos_ij), max(pos_ij)
            for et in sorted({arg_types[i - 1], arg_types[j - 1]}):
                fires = any(lo < po < hi for po in oe_positions.get(et, []))
                tag = "OE" if fires else "NoOE"
                fv[f"E_{i}E_{j}{tag}_{et}"] = 1.0
    return fv
