"""Seeded synthetic corpus generator for end-to-end tests.

Each document mentions a few agent and target entities.  Agent surfaces come
in a long form ("<name> complex") and a short prefix alias ("<name>"), so
alias closure under the prefix ruleset groups them.  Every agent/target pair
gets one evidence sentence: a positive pair is linked by the cue word, a
negative pair by the distractor verb.  Gold lists one representative
instance per positive group.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass

from .corpus import Corpus, RelationSignature, corpus_from_records

_FILLER = (
    "assay results experiment cells tissue pathway measured observed study "
    "signal receptor response baseline control sample culture growth levels "
    "analysis report values condition series evidence batch screen panel"
).split()


@dataclass(frozen=True)
class SynthSpec:
    relation_name: str = "Activates"
    arg_types: tuple[str, ...] = ("AGENT", "TARGET")
    cue_word: str = "activates"
    distractor_word: str = "ignores"
    positive_rate: float = 0.45
    alias_rules: str = "biomedical-prefix"

    @property
    def signature(self) -> RelationSignature:
        return RelationSignature(self.relation_name, tuple(self.arg_types))


def _fresh_names(rng: random.Random, count: int, taken: set[str]) -> list[str]:
    """Distinct names, none a prefix of another (so distinct entities never
    alias under the prefix ruleset)."""
    names: list[str] = []
    while len(names) < count:
        cand = "".join(rng.choice(string.ascii_lowercase) for _ in range(5))
        pool = names + sorted(taken)
        if any(cand.startswith(n) or n.startswith(cand) for n in pool):
            continue
        names.append(cand)
        taken.add(cand)
    return names


def _filler(rng: random.Random, k: int) -> list[str]:
    return [rng.choice(_FILLER) for _ in range(k)]


def synth_corpus(n_docs: int, seed: int, spec: SynthSpec = SynthSpec()) -> Corpus:
    """Generate a deterministic corpus with planted positive pairs."""
    rng = random.Random(seed)
    records: list[tuple[int, dict]] = []
    ln = 0

    def emit(obj):
        nonlocal ln
        ln += 1
        records.append((ln, obj))

    for d in range(n_docs):
        doc_id = f"synth_{d:04d}"
        taken: set[str] = set()
        n_agents = rng.randint(1, 2)
        n_targets = rng.randint(1, 2)
        agent_names = _fresh_names(rng, n_agents, taken)
        target_names = _fresh_names(rng, n_targets, taken)

        sentences: list[list[str]] = [_filler(rng, rng.randint(3, 5))]
        mentions: dict[str, list[tuple[int, int, int]]] = {}

        def mention(eid, si, start, end):
            mentions.setdefault(eid, []).append((si, start, end))

        positives: list[tuple[str, str]] = []
        for ai, aname in enumerate(agent_names):
            for ti, tname in enumerate(target_names):
                verb = (
                    spec.cue_word
                    if rng.random() < spec.positive_rate
                    else spec.distractor_word
                )
                tail = _filler(rng, rng.randint(1, 3))
                sent = [aname, "complex", verb, tname] + tail
                si = len(sentences)
                sentences.append(sent)
                mention(f"a{ai}_full", si, 0, 2)
                mention(f"t{ti}", si, 3, 4)
                if verb == spec.cue_word:
                    positives.append((f"a{ai}_full", f"t{ti}"))

        # later alias mentions widen the spans and exercise grouping
        for ai, aname in enumerate(agent_names):
            sent = [aname, "was", "observed"] + _filler(rng, rng.randint(1, 2))
            si = len(sentences)
            sentences.append(sent)
            mention(f"a{ai}_short", si, 0, 1)
        if rng.random() < 0.5:
            ti = rng.randrange(n_targets)
            sent = _filler(rng, 2) + [target_names[ti]]
            si = len(sentences)
            sentences.append(sent)
            mention(f"t{ti}", si, len(sent) - 1, len(sent))
        sentences.append(_filler(rng, rng.randint(2, 4)))

        emit({"kind": "document", "doc_id": doc_id, "sentences": sentences})
        for ai in range(n_agents):
            for suffix in ("full", "short"):
                eid = f"a{ai}_{suffix}"
                emit(
                    {
                        "kind": "entity",
                        "doc_id": doc_id,
                        "entity_id": eid,
                        "entity_type": spec.arg_types[0],
                        "mentions": [
                            {"sentence_index": si, "token_start": s, "token_end": e}
                            for si, s, e in mentions[eid]
                        ],
                    }
                )
        for ti in range(n_targets):
            eid = f"t{ti}"
            emit(
                {
                    "kind": "entity",
                    "doc_id": doc_id,
                    "entity_id": eid,
                    "entity_type": spec.arg_types[1],
                    "mentions": [
                        {"sentence_index": si, "token_start": s, "token_end": e}
                        for si, s, e in mentions[eid]
                    ],
                }
            )
        for a_eid, t_eid in positives:
            emit(
                {
                    "kind": "relation",
                    "doc_id": doc_id,
                    "relation_name": spec.relation_name,
                    "arg_entity_ids": [a_eid, t_eid],
                }
            )

    return corpus_from_records(records, spec.signature)
