"""SVM dual solver, logistic model, and explicit feature extraction."""

import random

import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from cskrel.candidates import CandidateRelationInstance
from cskrel.classifiers import (
    BIAS_FEATURE,
    MaxEntModel,
    class_balance_weights,
    decision_values,
    design_matrix,
    extract_features,
    kkt_violation,
    nll_and_grad,
    predict_maxent,
    predict_svm,
    train_maxent,
    train_svm,
)
from cskrel.corpus import alias_closure
from cskrel.kernel import KernelParams, gram_matrix
from cskrel.seqrep import GeneralizedToken, SequenceRepresentation, build_sequence

from conftest import NEWS_DOC_ID, T1_ARGS

F = frozenset


def _seq(words, arity=2):
    toks = []
    for w in words:
        if w.startswith("E"):
            toks.append(GeneralizedToken.arg(int(w[1:])))
        else:
            toks.append(GeneralizedToken.word(w))
    return SequenceRepresentation(tuple(toks), arity)


# three positive and three negative patterns, cleanly separated
POS = [
    _seq(["E1", "succeeds", "E2", "boss"]),
    _seq(["E1", "succeeds", "E2", "chief"]),
    _seq(["now", "E1", "succeeds", "E2"]),
]
NEG = [
    _seq(["E1", "met", "E2", "boss"]),
    _seq(["E1", "met", "E2", "chief"]),
    _seq(["now", "E1", "met", "E2"]),
]
SEQS = POS + NEG
LABELS = [True] * 3 + [False] * 3


# --- weighting --------------------------------------------------------------


def test_class_balance_weights():
    w = class_balance_weights([True, True, False, False, False])
    assert_allclose(w, [1.5, 1.5, 1.0, 1.0, 1.0])
    assert w[:2].sum() == w[2:].sum()
    with pytest.raises(ValueError):
        class_balance_weights([True, True])


# --- SVM --------------------------------------------------------------------


def _train(seqs=SEQS, labels=LABELS, tol=1e-10, C=10.0, **kw):
    G = gram_matrix(seqs)
    model = train_svm(G, labels, C=C, tol=tol, sequences=seqs, **kw)
    return G, model


def test_svm_separates_fixture():
    G, model = _train()
    scores = decision_values(model, G[:, model.support])
    assert np.all((scores > 0) == np.array(LABELS))
    assert model.converged


def test_svm_kkt_and_dual_feasibility():
    G, model = _train()
    gap = kkt_violation(G, LABELS, None, 10.0, model.alpha)
    assert gap <= 1e-10 + 1e-12
    y = np.where(np.array(LABELS), 1.0, -1.0)
    assert abs(np.dot(model.alpha, y)) <= 1e-9
    assert np.all(model.alpha >= -1e-12)
    assert np.all(model.alpha <= 10.0 + 1e-9)


def test_svm_objective_monotone():
    _, model = _train()
    assert model.objective[0] == 0.0
    assert np.all(np.diff(model.objective) >= -1e-8)


def test_svm_weighted_boxes():
    weights = class_balance_weights(LABELS + [False, False])
    seqs = SEQS + [_seq(["E1", "met", "E2", "again"]), _seq(["E1", "met", "E2", "too"])]
    G = gram_matrix(seqs)
    model = train_svm(G, LABELS + [False, False], weights=weights, C=1.0, tol=1e-10)
    U = 1.0 * weights
    assert np.all(model.alpha <= U + 1e-9)


def test_svm_duplicate_equals_double_weight():
    # appending a copy of instance 0 is the same as giving it weight 2
    seqs_dup = SEQS + [SEQS[0]]
    G_dup = gram_matrix(seqs_dup)
    m_dup = train_svm(G_dup, LABELS + [True], C=1.0, tol=1e-12)
    w = np.ones(6)
    w[0] = 2.0
    G = gram_matrix(SEQS)
    m_w = train_svm(G, LABELS, weights=w, C=1.0, tol=1e-12)
    probe = gram_matrix(SEQS + [_seq(["E1", "succeeds", "E2"])])[6, :6]
    s_dup = probe @ (m_dup.alpha[:6] * np.where(np.array(LABELS), 1, -1)) + (
        m_dup.alpha[6] * probe[0]
    ) + m_dup.b
    s_w = probe @ (m_w.alpha * np.where(np.array(LABELS), 1, -1)) + m_w.b
    assert abs(s_dup - s_w) < 1e-6


def test_svm_order_invariance():
    perm = [3, 0, 4, 1, 5, 2]
    seqs_p = [SEQS[i] for i in perm]
    labels_p = [LABELS[i] for i in perm]
    _, m1 = _train()
    _, m2 = _train(seqs_p, labels_p)
    probe = _seq(["E1", "succeeds", "E2", "boss"])
    s1, _ = predict_svm(m1, probe)
    s2, _ = predict_svm(m2, probe)
    assert abs(s1 - s2) < 1e-6


def test_svm_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        train_svm(np.zeros((4, 4)), [True, False, True, False])
    with pytest.raises(ValueError):
        train_svm(np.eye(3), [True, True, True])
    with pytest.raises(ValueError):
        train_svm(np.eye(3), [True, False])


def test_predict_svm_signs_and_zero_overlap():
    _, model = _train()
    for seq, lab in zip(SEQS, LABELS):
        score, pred = predict_svm(model, seq)
        assert pred == lab
        assert pred == (score > 0.0)
    # no shared symbols beyond the argument tokens: every cross kernel is 0,
    # so the score collapses to the bias
    probe = _seq(["E1", "zq", "E2", "zr"])
    score, _ = predict_svm(model, probe)
    assert score == pytest.approx(model.b, abs=1e-12)


def test_predict_svm_guards():
    _, model = _train()
    with pytest.raises(ValueError):
        predict_svm(model, _seq(["E1", "x", "E2", "E3"], arity=3))
    G = gram_matrix(SEQS)
    bare = train_svm(G, LABELS, C=10.0)
    with pytest.raises(ValueError):
        predict_svm(bare, SEQS[0])


def test_svm_stores_support_sequences():
    _, model = _train()
    assert model.support_sequences is not None
    assert len(model.support_sequences) == len(model.support)
    assert len(model.coef) == len(model.support)


# --- MaxEnt -----------------------------------------------------------------


def _random_problem(rng, n=12, d=4):
    X = np.array([[rng.gauss(0, 1) for _ in range(d)] for _ in range(n)])
    y = np.array([rng.random() < 0.5 for _ in range(n)], dtype=float)
    if y.all() or not y.any():
        y[0] = 1.0 - y[0]
    w = np.array([rng.uniform(0.5, 2.0) for _ in range(n)])
    theta = np.array([rng.gauss(0, 1) for _ in range(d)])
    l2 = rng.uniform(0.1, 2.0)
    return sp.csr_matrix(X), y, w, theta, l2


def test_nll_gradient_matches_finite_differences():
    rng = random.Random(71)
    worst = 0.0
    for _ in range(30):
        X, y, w, theta, l2 = _random_problem(rng)
        _, grad = nll_and_grad(X, y, w, l2, theta)
        eps = 1e-6
        for k in range(X.shape[1]):
            e = np.zeros(X.shape[1])
            e[k] = eps
            fp, _ = nll_and_grad(X, y, w, l2, theta + e)
            fm, _ = nll_and_grad(X, y, w, l2, theta - e)
            fd = (fp - fm) / (2 * eps)
            rel = abs(grad[k] - fd) / max(1.0, abs(fd))
            worst = max(worst, rel)
    assert worst < 1e-5


FVS = [
    {"good": 1.0},
    {"good": 1.0, "x": 1.0},
    {"good": 1.0, "y": 1.0},
    {"bad": 1.0},
    {"bad": 1.0, "x": 1.0},
    {"bad": 1.0, "y": 1.0},
]
FV_LABELS = [True, True, True, False, False, False]


def test_maxent_predictive_feature_weights():
    model = train_maxent(FVS, FV_LABELS, l2=0.5)
    gi = model.feature_index["good"]
    bi = model.feature_index["bad"]
    assert model.weights[gi] > 0.0 > model.weights[bi]
    for fv, lab in zip(FVS, FV_LABELS):
        p, pred = predict_maxent(model, fv)
        assert pred == lab
        assert pred == (p >= 0.5)


def test_maxent_bias_always_on():
    model = train_maxent(FVS, FV_LABELS, l2=0.5)
    assert BIAS_FEATURE in model.feature_index
    X = design_matrix([{}, {"good": 1.0}], model.feature_index)
    col = model.feature_index[BIAS_FEATURE]
    assert X[0, col] == 1.0 and X[1, col] == 1.0


def test_maxent_regularization_shrinks_weights():
    small = train_maxent(FVS, FV_LABELS, l2=0.1)
    large = train_maxent(FVS, FV_LABELS, l2=10.0)
    assert np.linalg.norm(large.weights) < np.linalg.norm(small.weights)


def test_maxent_empty_fv_scores_bias():
    model = train_maxent(FVS, FV_LABELS, l2=0.5)
    p, _ = predict_maxent(model, {})
    bias = model.weights[model.feature_index[BIAS_FEATURE]]
    assert p == pytest.approx(1.0 / (1.0 + np.exp(-bias)), rel=1e-12)


def test_maxent_zero_weights_give_half():
    model = MaxEntModel({BIAS_FEATURE: 0}, np.zeros(1), 1.0)
    p, pred = predict_maxent(model, {"anything": 1.0})
    assert p == 0.5
    assert pred is True  # threshold is inclusive


def test_maxent_unseen_features_ignored():
    model = train_maxent(FVS, FV_LABELS, l2=0.5)
    p1, _ = predict_maxent(model, {"good": 1.0})
    p2, _ = predict_maxent(model, {"good": 1.0, "never_seen": 5.0})
    assert p1 == p2


def test_maxent_single_class_raises():
    with pytest.raises(ValueError):
        train_maxent([{"a": 1.0}, {"b": 1.0}], [True, True])


def test_maxent_order_invariance():
    perm = [5, 2, 0, 4, 1, 3]
    m1 = train_maxent(FVS, FV_LABELS, l2=0.5)
    m2 = train_maxent([FVS[i] for i in perm], [FV_LABELS[i] for i in perm], l2=0.5)
    assert m1.feature_index == m2.feature_index
    assert_allclose(m1.weights, m2.weights, atol=1e-6)


def test_maxent_solution_is_a_minimum():
    rng = random.Random(113)
    model = train_maxent(FVS, FV_LABELS, l2=0.5)
    X = design_matrix(FVS, model.feature_index)
    y = np.array(FV_LABELS, dtype=float)
    w = np.ones(len(y))
    base, grad = nll_and_grad(X, y, w, 0.5, model.weights)
    assert np.abs(grad).max() < 1e-4
    for _ in range(20):
        d = np.array([rng.gauss(0, 1) for _ in range(len(model.weights))])
        d *= 0.1 / np.linalg.norm(d)
        probe, _ = nll_and_grad(X, y, w, 0.5, model.weights + d)
        assert probe >= base - 1e-9


# --- feature extraction -----------------------------------------------------


@pytest.fixture
def t1_features(news_corpus):
    doc = news_corpus.doc(NEWS_DOC_ID)
    groups = alias_closure(list(news_corpus.entities[NEWS_DOC_ID].values()), "general")
    cand = CandidateRelationInstance(NEWS_DOC_ID, T1_ARGS)
    seq = build_sequence(doc, cand, groups)
    return extract_features(cand, doc, seq, groups), doc, groups, cand


def test_tuple_span_feature(t1_features):
    fv, *_ = t1_features
    assert fv["TupleSpan"] == 2.0


def test_line_distance_features(t1_features):
    fv, *_ = t1_features
    assert fv["SentDiff_23"] == 2.0
    assert fv["SameLine_23"] == 0.0
    for pair in ("12", "13", "14", "24", "34"):
        assert fv[f"SentDiff_{pair}"] == 0.0
        assert fv[f"SameLine_{pair}"] == 1.0


def test_between_entity_features(t1_features):
    fv, *_ = t1_features
    assert fv["E_1E_2OE_POST"] == 1.0
    assert fv["E_1E_2OE_ORG"] == 1.0
    assert fv["E_1E_3OE_ORG"] == 1.0
    assert fv["E_1E_3NoOE_PER"] == 1.0
    assert fv["E_1E_4OE_ORG"] == 1.0
    assert fv["E_1E_4NoOE_PER"] == 1.0
    assert fv["E_2E_3OE_POST"] == 1.0
    assert fv["E_2E_3NoOE_PER"] == 1.0
    assert fv["E_2E_4OE_POST"] == 1.0
    assert fv["E_2E_4NoOE_PER"] == 1.0
    # both members of pair (3,4) are persons, and no person is an
    # other-entity here; no feature for types outside the pair
    assert fv["E_3E_4NoOE_PER"] == 1.0
    assert "E_3E_4OE_POST" not in fv
    assert "E_3E_4OE_ORG" not in fv
    # exactly one of OE/NoOE per (pair, type)
    for name in fv:
        if "NoOE_" in name:
            assert name.replace("NoOE_", "OE_") not in fv


def test_word_features(t1_features):
    fv, *_ = t1_features
    assert fv["W_succeeds"] == 1.0
    assert fv["W_extraordinary"] == 1.0
    assert "W_volvo" not in fv  # consumed by an argument token
    assert "W_the" not in fv  # stopword
    assert all(v in (0.0, 1.0) for k, v in fv.items() if k.startswith("W_"))


def test_cluster_features(news_corpus):
    doc = news_corpus.doc(NEWS_DOC_ID)
    groups = alias_closure(list(news_corpus.entities[NEWS_DOC_ID].values()), "general")
    cand = CandidateRelationInstance(NEWS_DOC_ID, T1_ARGS)
    seq = build_sequence(doc, cand, groups, clusters={"succeeds": "c7"})
    fv = extract_features(cand, doc, seq, groups)
    assert fv["C_c7"] == 1.0
    assert fv["W_succeeds"] == 1.0


def test_single_sentence_features(news_corpus, tmp_path):
    from cskrel.corpus import RelationSignature, corpus_from_records
    from conftest import _entity

    recs = [
        {
            "kind": "document",
            "doc_id": "d",
            "sentences": [["Acme", "named", "Ann", "boss", "."]],
        },
        _entity("d", "org", "ORG", [(0, 0, 1)]),
        _entity("d", "per", "PER", [(0, 2, 3)]),
    ]
    corpus = corpus_from_records(
        list(enumerate(recs, 1)), RelationSignature("R", ("ORG", "PER"))
    )
    doc = corpus.doc("d")
    groups = alias_closure(list(corpus.entities["d"].values()), "general")
    cand = CandidateRelationInstance("d", ("org", "per"))
    seq = build_sequence(doc, cand, groups)
    fv = extract_features(cand, doc, seq, groups)
    assert fv["TupleSpan"] == 0.0
    assert fv["SentDiff_12"] == 0.0
    assert fv["SameLine_12"] == 1.0
    assert fv["E_1E_2NoOE_ORG"] == 1.0
    assert fv["E_1E_2NoOE_PER"] == 1.0


def test_features_invariant_across_alias_variants(news_corpus):
    doc = news_corpus.doc(NEWS_DOC_ID)
    groups = alias_closure(list(news_corpus.entities[NEWS_DOC_ID].values()), "general")
    variants = [
        T1_ARGS,
        ("org_volvo", "post_chairman", "per_gyllenhammar", "per_mrsvanholm"),
    ]
    fvs = []
    for v in variants:
        cand = CandidateRelationInstance(NEWS_DOC_ID, v)
        seq = build_sequence(doc, cand, groups)
        fvs.append(extract_features(cand, doc, seq, groups))
    assert fvs[0] == fvs[1]
