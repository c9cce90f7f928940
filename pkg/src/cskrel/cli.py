"""Command-line pipeline: corpus validation, candidate generation, word
clustering, sequence building, training, prediction, evaluation, a kernel
self-check against the enumeration oracle, and synthetic corpus generation.

Configuration precedence: built-in defaults < --config file (TOML or JSON)
< explicit flags.  Exit codes: 0 success, 1 validation/check failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

import numpy as np

from . import __version__
from .candidates import (
    filter_candidates,
    generate_candidates,
    label_candidates,
    minimal_span,
    span,
)
from .classifiers import (
    MaxEntModel,
    class_balance_weights,
    extract_features,
    predict_maxent,
    train_maxent,
    train_svm,
)
from .clusters import cluster_words, frequent_words, load_cluster_map, load_embeddings
from .corpus import (
    ALIAS_RULESETS,
    Corpus,
    CorpusError,
    RelationSignature,
    alias_closure,
    load_corpus,
    load_documents,
    save_corpus,
    validation_report,
)
from .evaluation import evaluate_mention, evaluate_rigd
from .kernel import KernelParams, csk, gram_matrix, gsk, oracle_csk, oracle_gsk
from .seqrep import GeneralizedToken, SequenceRepresentation, build_sequence
from .stopwords import STOPWORDS, load_stopwords
from .synth import SynthSpec, synth_corpus

DEFAULT_SPAN_THRESHOLDS = {"Succession": 2, "Lives_In": 4, "Interact": 2}

CONFIG_DEFAULTS = {
    "relation": None,
    "arg_types": None,
    "alias_rules": "general",
    "max_minimal_span": None,
    "lambda": 0.9,
    "n_prime": 4,
    "C": 1.0,
    "l2": 1.0,
    "classifier": "svm",
    "min_freq": 5,
    "distance_threshold": 0.4,
    "seed": 0,
    "workers": 1,
}


class UsageError(Exception):
    pass


def _load_config_file(path) -> dict:
    if str(path).endswith(".toml"):
        import tomli

        with open(path, "rb") as fh:
            cfg = tomli.load(fh)
    else:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    unknown = set(cfg) - set(CONFIG_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _merge_config(args) -> dict:
    cfg = dict(CONFIG_DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(_load_config_file(args.config))
    flag_map = {
        "relation": "relation",
        "arg_types": "arg_types",
        "alias_rules": "alias_rules",
        "max_minimal_span": "max_minimal_span",
        "lam": "lambda",
        "n_prime": "n_prime",
        "C": "C",
        "l2": "l2",
        "classifier": "classifier",
        "min_freq": "min_freq",
        "distance_threshold": "distance_threshold",
        "seed": "seed",
        "workers": "workers",
    }
    for attr, key in flag_map.items():
        v = getattr(args, attr, None)
        if v is not None:
            cfg[key] = v
    if isinstance(cfg["arg_types"], str):
        cfg["arg_types"] = [t.strip() for t in cfg["arg_types"].split(",") if t.strip()]
    return cfg


def _signature(cfg) -> RelationSignature:
    if not cfg["relation"] or not cfg["arg_types"]:
        raise UsageError("--relation and --arg-types are required")
    return RelationSignature(cfg["relation"], tuple(cfg["arg_types"]))


def _threshold(cfg) -> int | None:
    if cfg["max_minimal_span"] is not None:
        return int(cfg["max_minimal_span"])
    return DEFAULT_SPAN_THRESHOLDS.get(cfg["relation"])


def _stopwords(args) -> frozenset:
    path = getattr(args, "stopwords", None)
    return load_stopwords(path) if path else STOPWORDS


def _clusters(args) -> dict | None:
    path = getattr(args, "clusters", None)
    return load_cluster_map(path) if path else None


def _doc_pipeline(corpus: Corpus, cfg, threshold):
    """Per document: alias partition and labeled, span-filtered candidates.
    Returns (doc, groups, labeled) triples plus a filtering report."""
    out = []
    dropped = dropped_pos = 0
    for doc in corpus.documents:
        ents = corpus.entities[doc.doc_id]
        groups = alias_closure(list(ents.values()), cfg["alias_rules"])
        cands = generate_candidates(doc, ents, corpus.signature, groups)
        if threshold is not None:
            kept = filter_candidates(cands, doc, groups, threshold)
            kept_set = set(kept)
            lost = [c for c in cands if c not in kept_set]
            gold_keys = label_candidates(lost, corpus.gold[doc.doc_id], groups)
            dropped += len(lost)
            dropped_pos += sum(1 for c in gold_keys if c.label)
            cands = kept
        labeled = label_candidates(cands, corpus.gold[doc.doc_id], groups)
        out.append((doc, groups, labeled))
    report = {"dropped": dropped, "dropped_gold_positive": dropped_pos}
    return out, report


def _build_all_seqs(triples, clusters, stopwords):
    items = []
    for doc, groups, labeled in triples:
        for cand in labeled:
            seq = build_sequence(doc, cand, groups, clusters, stopwords)
            items.append((doc, groups, cand, seq))
    return items


# --- subcommands ------------------------------------------------------------


def cmd_validate_corpus(args) -> int:
    cfg = _merge_config(args)
    corpus = load_corpus(args.corpus, _signature(cfg))
    print(validation_report(corpus))
    return 0


def cmd_gen_candidates(args) -> int:
    cfg = _merge_config(args)
    corpus = load_corpus(args.corpus, _signature(cfg))
    threshold = _threshold(cfg)
    triples, report = _doc_pipeline(corpus, cfg, threshold)
    n = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for doc, groups, labeled in triples:
            for cand in labeled:
                lo, hi = span(cand, doc, groups)
                fh.write(
                    json.dumps(
                        {
                            "doc_id": cand.doc_id,
                            "arg_entity_ids": list(cand.arg_entity_ids),
                            "span": [lo, hi],
                            "minimal_span": minimal_span(cand, doc, groups),
                            "label": cand.label,
                        }
                    )
                    + "\n"
                )
                n += 1
    print(
        f"wrote {n} candidates (threshold {threshold}; dropped {report['dropped']},"
        f" of which {report['dropped_gold_positive']} gold-positive)"
    )
    return 0


def cmd_cluster(args) -> int:
    cfg = _merge_config(args)
    table = load_embeddings(args.embeddings)
    docs = load_documents(args.corpus)
    vocab = frequent_words(docs, int(cfg["min_freq"]))
    assignment = cluster_words(
        table, vocab, float(cfg["distance_threshold"]), int(cfg["min_freq"])
    )
    assignment.save(args.out)
    print(
        f"clustered {len(assignment.assignment)} words into"
        f" {len(set(assignment.assignment.values()))} clusters"
        f" ({len(assignment.skipped)} skipped)"
    )
    return 0


def cmd_build_seqs(args) -> int:
    cfg = _merge_config(args)
    corpus = load_corpus(args.corpus, _signature(cfg))
    triples, _ = _doc_pipeline(corpus, cfg, _threshold(cfg))
    items = _build_all_seqs(triples, _clusters(args), _stopwords(args))
    with open(args.out, "w", encoding="utf-8") as fh:
        for _, _, cand, seq in items:
            obj = seq.to_json()
            obj["label"] = cand.label
            fh.write(json.dumps(obj) + "\n")
    print(f"wrote {len(items)} sequences")
    return 0


def _model_common(cfg, signature, clusters, stopwords) -> dict:
    return {
        "version": 1,
        "relation_name": signature.relation_name,
        "arg_types": list(signature.arg_types),
        "alias_rules": cfg["alias_rules"],
        "max_minimal_span": cfg["max_minimal_span"],
        "clusters": clusters,
        "stopwords": sorted(stopwords) if stopwords is not STOPWORDS else None,
    }


def cmd_train(args) -> int:
    cfg = _merge_config(args)
    signature = _signature(cfg)
    corpus = load_corpus(args.corpus, signature)
    clusters = _clusters(args)
    stopwords = _stopwords(args)
    triples, _ = _doc_pipeline(corpus, cfg, _threshold(cfg))
    items = _build_all_seqs(triples, clusters, stopwords)
    if not items:
        raise UsageError("no candidates to train on")
    labels = [cand.label for _, _, cand, _ in items]
    weights = class_balance_weights(labels)
    model_obj = _model_common(cfg, signature, clusters, stopwords)
    if cfg["classifier"] == "svm":
        params = KernelParams(lam=float(cfg["lambda"]), n_prime=int(cfg["n_prime"]))
        seqs = [seq for _, _, _, seq in items]
        gram = gram_matrix(seqs, params, workers=int(cfg["workers"]))
        model = train_svm(
            gram,
            labels,
            weights,
            C=float(cfg["C"]),
            sequences=seqs,
            params=params,
        )
        model_obj.update(
            {
                "classifier": "svm",
                "kernel": {"lambda": params.lam, "n_prime": params.n_prime},
                "C": float(model.C),
                "b": float(model.b),
                "converged": bool(model.converged),
                "supports": [
                    {
                        "coef": float(c),
                        "arity": sv.arity,
                        "tokens": [t.to_json() for t in sv.tokens],
                    }
                    for c, sv in zip(model.coef, model.support_sequences)
                ],
            }
        )
        if not model.converged:
            print("warning: solver hit the iteration cap", file=sys.stderr)
    elif cfg["classifier"] == "maxent":
        fvs = [
            extract_features(cand, doc, seq, groups)
            for doc, groups, cand, seq in items
        ]
        model = train_maxent(fvs, labels, weights, l2=float(cfg["l2"]))
        names = sorted(model.feature_index, key=model.feature_index.get)
        model_obj.update(
            {
                "classifier": "maxent",
                "l2": model.l2,
                "weights": {n: float(w) for n, w in zip(names, model.weights)},
            }
        )
    else:
        raise UsageError(f"unknown classifier {cfg['classifier']!r}")
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(model_obj, fh)
        fh.write("\n")
    print(f"trained {cfg['classifier']} on {len(items)} candidates -> {args.out}")
    return 0


def _load_model(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        model = json.load(fh)
    if model.get("version") != 1:
        raise UsageError(f"unsupported model version {model.get('version')!r}")
    return model


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    signature = RelationSignature(model["relation_name"], tuple(model["arg_types"]))
    corpus = load_corpus(args.corpus, signature)
    cfg = dict(CONFIG_DEFAULTS)
    cfg.update(
        {
            "relation": signature.relation_name,
            "alias_rules": model["alias_rules"],
            "max_minimal_span": model["max_minimal_span"],
        }
    )
    threshold = _threshold(cfg)
    stopwords = (
        frozenset(model["stopwords"]) if model["stopwords"] else STOPWORDS
    )
    triples, _ = _doc_pipeline(corpus, cfg, threshold)
    items = _build_all_seqs(triples, model["clusters"], stopwords)

    if model["classifier"] == "svm":
        kp = KernelParams(
            lam=model["kernel"]["lambda"], n_prime=model["kernel"]["n_prime"]
        )
        supports = [
            SequenceRepresentation(
                tuple(GeneralizedToken.from_json(t) for t in sv["tokens"]),
                sv["arity"],
            )
            for sv in model["supports"]
        ]
        coef = np.array([sv["coef"] for sv in model["supports"]])
        seqs = [seq for _, _, _, seq in items]
        # one Gram pass over supports + queries reuses per-sequence work
        full = gram_matrix(
            supports + seqs, kp, workers=int(getattr(args, "workers", 1) or 1)
        )
        scores = full[len(supports):, : len(supports)] @ coef + model["b"]
        results = [(float(s), bool(s > 0.0)) for s in scores]
    elif model["classifier"] == "maxent":
        me = MaxEntModel(
            {n: i for i, n in enumerate(model["weights"])},
            np.array(list(model["weights"].values()), dtype=float),
            model["l2"],
        )
        results = []
        for doc, groups, cand, seq in items:
            fv = extract_features(cand, doc, seq, groups)
            prob, lab = predict_maxent(me, fv)
            results.append((float(prob), bool(lab)))
    else:
        raise UsageError(f"unknown classifier {model['classifier']!r}")

    with open(args.out, "w", encoding="utf-8") as fh:
        for (doc, groups, cand, seq), (score, label) in zip(items, results):
            fh.write(
                json.dumps(
                    {
                        "doc_id": cand.doc_id,
                        "arg_entity_ids": list(cand.arg_entity_ids),
                        "score": score,
                        "label": label,
                        "gold_label": cand.label,
                    }
                )
                + "\n"
            )
    print(f"wrote {len(items)} predictions")
    return 0


def cmd_eval(args) -> int:
    cfg = _merge_config(args)
    signature = _signature(cfg)
    corpus = load_corpus(args.corpus, signature)
    preds = []
    with open(args.predictions, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                preds.append(json.loads(line))

    if args.level == "rigd":
        from .candidates import CandidateRelationInstance

        groups_by_doc = {
            doc.doc_id: alias_closure(
                list(corpus.entities[doc.doc_id].values()), cfg["alias_rules"]
            )
            for doc in corpus.documents
        }
        positive = [
            CandidateRelationInstance(p["doc_id"], tuple(p["arg_entity_ids"]))
            for p in preds
            if p["label"]
        ]
        report = evaluate_rigd(positive, corpus.gold, groups_by_doc)
    else:
        report = evaluate_mention(
            [p["label"] for p in preds], [p["gold_label"] for p in preds]
        )
    print(report.table())
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2)
            fh.write("\n")
    return 0


def _random_sequence(rng: random.Random, max_len: int):
    """Random generalized sequence over a small alphabet: two argument
    tokens, four words, two cluster ids shared across some words."""
    seq = []
    for _ in range(rng.randint(2, max_len)):
        r = rng.random()
        if r < 0.18:
            seq.append(frozenset([f"E:{rng.randint(1, 2)}"]))
        elif r < 0.24:
            seq.append(frozenset(["SB"]))
        elif r < 0.32:
            seq.append(frozenset(["OE:X"]))
        else:
            w = f"W:w{rng.randint(0, 3)}"
            if rng.random() < 0.4:
                seq.append(frozenset([w, f"C:c{rng.randint(0, 1)}"]))
            else:
                seq.append(frozenset([w]))
    return seq


def cmd_kernel_check(args) -> int:
    rng = random.Random(args.seed)
    lam = args.lam if args.lam is not None else 0.9
    worst_abs = worst_rel = 0.0
    for _ in range(args.trials):
        s = _random_sequence(rng, args.max_len)
        t = _random_sequence(rng, args.max_len)
        n_gsk = rng.randint(1, 4)
        got, want = gsk(s, t, n_gsk, lam), oracle_gsk(s, t, n_gsk, lam)
        diffs = [(got, want)]
        n_csk = rng.randint(3, 4)
        got_c = csk(s, t, n_csk, lam, 1, 2)
        want_c = oracle_csk(s, t, n_csk, lam, 1, 2)
        diffs.append((got_c, want_c))
        for got, want in diffs:
            err = abs(got - want)
            worst_abs = max(worst_abs, err)
            worst_rel = max(worst_rel, err / max(1.0, abs(want)))
    print(f"max abs deviation {worst_abs:.3e}, max rel deviation {worst_rel:.3e}")
    ok = worst_rel <= 1e-9
    print("kernel check PASSED" if ok else "kernel check FAILED")
    return 0 if ok else 1


def cmd_synth(args) -> int:
    cfg = _merge_config(args)
    spec = SynthSpec()
    if args.positive_rate is not None:
        spec = SynthSpec(positive_rate=args.positive_rate)
    corpus = synth_corpus(args.docs, int(cfg["seed"]), spec)
    save_corpus(corpus, args.out)
    n_gold = sum(len(v) for v in corpus.gold.values())
    print(f"wrote {len(corpus.documents)} documents, {n_gold} gold relations")
    return 0


def cmd_config(args) -> int:
    cfg = _merge_config(args)
    out = dict(cfg)
    out["span_thresholds"] = DEFAULT_SPAN_THRESHOLDS
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


# --- parser -----------------------------------------------------------------


def _add_common(p, *, corpus=False, signature=False, out=False):
    p.add_argument("--config", help="TOML or JSON config file")
    if corpus:
        p.add_argument("--corpus", required=True, help="canonical JSONL corpus")
    if signature:
        p.add_argument("--relation", help="relation name")
        p.add_argument(
            "--arg-types", dest="arg_types", help="comma-separated entity types"
        )
        p.add_argument(
            "--alias-rules", dest="alias_rules", choices=ALIAS_RULESETS, default=None
        )
    if out:
        p.add_argument("--out", required=True, help="output path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cskrel",
        description="document-scoped N-ary cross-sentence relation extraction",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-corpus", help="check corpus invariants")
    _add_common(p, corpus=True, signature=True)
    p.set_defaults(func=cmd_validate_corpus)

    p = sub.add_parser("gen-candidates", help="emit labeled candidates")
    _add_common(p, corpus=True, signature=True, out=True)
    p.add_argument("--max-minimal-span", dest="max_minimal_span", type=int)
    p.set_defaults(func=cmd_gen_candidates)

    p = sub.add_parser("cluster", help="build word clusters from embeddings")
    _add_common(p, corpus=True, out=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--min-freq", dest="min_freq", type=int)
    p.add_argument("--threshold", dest="distance_threshold", type=float)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("build-seqs", help="emit sequence representations")
    _add_common(p, corpus=True, signature=True, out=True)
    p.add_argument("--max-minimal-span", dest="max_minimal_span", type=int)
    p.add_argument("--clusters", help="word->cluster JSON")
    p.add_argument("--stopwords", help="stopword list, one per line")
    p.set_defaults(func=cmd_build_seqs)

    p = sub.add_parser("train", help="train a classifier")
    _add_common(p, corpus=True, signature=True, out=True)
    p.add_argument("--classifier", choices=["svm", "maxent"], default=None)
    p.add_argument("--max-minimal-span", dest="max_minimal_span", type=int)
    p.add_argument("--clusters")
    p.add_argument("--stopwords")
    p.add_argument("--C", dest="C", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--n-prime", dest="n_prime", type=int)
    p.add_argument("--l2", dest="l2", type=float)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score candidates with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against gold")
    _add_common(p, corpus=True, signature=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--level", choices=["rigd", "mention"], default="rigd")
    p.add_argument("--json-out", dest="json_out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("kernel-check", help="compare the DP against the oracle")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-len", dest="max_len", type=int, default=8)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_kernel_check)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    _add_common(p, out=True)
    p.add_argument("--docs", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--positive-rate", dest="positive_rate", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("config", help="print the effective configuration")
    _add_common(p)
    p.add_argument("--classifier", choices=["svm", "maxent"], default=None)
    p.add_argument("--max-minimal-span", dest="max_minimal_span", type=int)
    p.add_argument("--C", dest="C", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--n-prime", dest="n_prime", type=int)
    p.add_argument("--l2", dest="l2", type=float)
    p.set_defaults(func=cmd_config)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (CorpusError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
