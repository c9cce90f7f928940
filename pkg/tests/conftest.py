"""Shared fixtures: the news-article micro-corpus, the drug-gene-mutation
micro-corpus, and random-sequence helpers for kernel tests."""

import json
import random

import pytest

from cskrel.corpus import RelationSignature, corpus_from_records

SUCCESSION = RelationSignature("Succession", ("ORG", "POST", "PER", "PER"))
INTERACT = RelationSignature("Interact", ("Drug", "Gene", "Mutation"))

NEWS_DOC_ID = "news_1"

_NEWS_S0 = (
    "An extraordinary shareholders meeting of AB Volvo in Gothenburg , Sweden ,"
    " elected Bert-Olof Svanholm chairman of the Swedish automotive group , in"
    " line with an earlier proposal ."
).split()
_NEWS_S1 = (
    "Mr. Svanholm is president of ABB Asea Brown Boveri Ltd. , an engineering"
    " concern jointly owned by Asea AB of Sweden and BBC Brown Boveri AG of"
    " Switzerland ."
).split()
_NEWS_S2 = (
    "He succeeds Pehr G. Gyllenhammar , who resigned in December after the"
    " collapse of a plan to merge Volvo 's vehicle operations with those of"
    " French partner Renault SA ."
).split()


def _entity(doc_id, eid, etype, mentions):
    return {
        "kind": "entity",
        "doc_id": doc_id,
        "entity_id": eid,
        "entity_type": etype,
        "mentions": [
            {"sentence_index": s, "token_start": a, "token_end": b}
            for s, a, b in mentions
        ],
    }


def news_records():
    """A three-sentence article: a chairman election, a presidency, and a
    succession.  "He" in the third sentence is annotated as a mention of the
    Svanholm entity, standing in for coreference."""
    d = NEWS_DOC_ID
    return [
        {"kind": "document", "doc_id": d, "sentences": [_NEWS_S0, _NEWS_S1, _NEWS_S2]},
        _entity(d, "org_abvolvo", "ORG", [(0, 5, 7)]),
        _entity(d, "per_svanholm", "PER", [(0, 13, 15), (2, 0, 1)]),
        _entity(d, "post_chairman", "POST", [(0, 15, 16)]),
        _entity(d, "per_mrsvanholm", "PER", [(1, 0, 2)]),
        _entity(d, "post_president", "POST", [(1, 3, 4)]),
        _entity(d, "org_abb", "ORG", [(1, 5, 10)]),
        _entity(d, "org_asea", "ORG", [(1, 17, 21)]),
        _entity(d, "org_bbc", "ORG", [(1, 22, 26)]),
        _entity(d, "per_gyllenhammar", "PER", [(2, 2, 5)]),
        _entity(d, "org_volvo", "ORG", [(2, 18, 19)]),
        _entity(d, "org_renault", "ORG", [(2, 27, 29)]),
        {
            "kind": "relation",
            "doc_id": d,
            "relation_name": "Succession",
            "arg_entity_ids": [
                "org_abvolvo",
                "post_chairman",
                "per_gyllenhammar",
                "per_svanholm",
            ],
        },
    ]


T1_ARGS = ("org_abvolvo", "post_chairman", "per_gyllenhammar", "per_svanholm")
T2_ARGS = ("org_abb", "post_president", "per_svanholm", "per_gyllenhammar")

DGM_DOC_ID = "dgm_1"

_DGM_S0 = "Patients with the L858R mutation in EGFR responded to erlotinib .".split()
_DGM_S1 = (
    "Treatment with erlotinib also benefited carriers of the T790M variant of"
    " EGFR ."
).split()
_DGM_S2 = "The A750P substitution was not affected by gefitinib .".split()


def dgm_records():
    d = DGM_DOC_ID
    return [
        {"kind": "document", "doc_id": d, "sentences": [_DGM_S0, _DGM_S1, _DGM_S2]},
        _entity(d, "drug_gefitinib", "Drug", [(2, 7, 8)]),
        _entity(d, "drug_erlotinib", "Drug", [(0, 9, 10), (1, 2, 3)]),
        _entity(d, "gene_egfr", "Gene", [(0, 6, 7), (1, 11, 12)]),
        _entity(d, "mut_t790m", "Mutation", [(1, 8, 9)]),
        _entity(d, "mut_a750p", "Mutation", [(2, 1, 2)]),
        _entity(d, "mut_l858r", "Mutation", [(0, 3, 4)]),
        {
            "kind": "relation",
            "doc_id": d,
            "relation_name": "Interact",
            "arg_entity_ids": ["drug_erlotinib", "gene_egfr", "mut_l858r"],
        },
        {
            "kind": "relation",
            "doc_id": d,
            "relation_name": "Interact",
            "arg_entity_ids": ["drug_erlotinib", "gene_egfr", "mut_t790m"],
        },
    ]


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
    return path


@pytest.fixture
def news_corpus():
    return corpus_from_records(list(enumerate(news_records(), start=1)), SUCCESSION)


@pytest.fixture
def dgm_corpus():
    return corpus_from_records(list(enumerate(dgm_records(), start=1)), INTERACT)


def render(seq):
    """Human-readable view of a sequence: E_i / SB / OE_T / bare words."""
    out = []
    for tok in seq.tokens:
        k = tok.kind
        if k == "arg":
            out.append(f"E_{tok.arg_index}")
        elif k == "sb":
            out.append("SB")
        elif k == "other":
            out.append("OE_" + next(iter(tok.symbols))[3:])
        else:
            w = next(s for s in sorted(tok.symbols) if s.startswith("W:"))
            out.append(w[2:])
    return out


def random_symbol_sequence(rng: random.Random, max_len: int, min_len: int = 2):
    """Random raw sequence over a small alphabet: 2 argument tokens, a break
    token, one other-entity type, 4 words with optional shared cluster ids."""
    seq = []
    for _ in range(rng.randint(min_len, max_len)):
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


def random_arg_sequence(rng: random.Random, max_len: int):
    """Like random_symbol_sequence but guaranteed to contain E:1 and E:2."""
    seq = random_symbol_sequence(rng, max_len)
    need = [frozenset(["E:1"]), frozenset(["E:2"])]
    have = set().union(*seq) if seq else set()
    for tok in need:
        if not (tok <= have):
            seq.insert(rng.randint(0, len(seq)), tok)
            have |= tok
    return seq
