"""Candidate relation instances: generation, span computation, filtering,
similarity grouping, and gold labeling."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .corpus import AliasGroups, Document, Entity, RelationAnnotation, RelationSignature


@dataclass(frozen=True)
class CandidateRelationInstance:
    doc_id: str
    arg_entity_ids: tuple[str, ...]
    label: bool | None = None  # True = positive, False = negative

    @property
    def arity(self) -> int:
        return len(self.arg_entity_ids)


@dataclass(frozen=True)
class CandidateGroup:
    doc_id: str
    members: tuple[CandidateRelationInstance, ...]


def generate_candidates(
    doc: Document,
    entities: dict[str, Entity],
    signature: RelationSignature,
    alias_groups: AliasGroups | None = None,
) -> list[CandidateRelationInstance]:
    """All ordered entity tuples type-matching the signature.

    Tuples where two slots hold the same entity, or alias-related entities,
    are excluded.  Output order is deterministic: lexicographic by entity_id
    per slot, slots varying fastest on the right.
    """
    per_slot = [
        sorted(e.entity_id for e in entities.values() if e.entity_type == et)
        for et in signature.arg_types
    ]
    out = []
    for combo in itertools.product(*per_slot):
        ok = True
        for i in range(len(combo)):
            for j in range(i + 1, len(combo)):
                if combo[i] == combo[j] or (
                    alias_groups is not None
                    and alias_groups.same_group(combo[i], combo[j])
                ):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(CandidateRelationInstance(doc.doc_id, combo))
    return out


def _argument_sentences(
    candidate: CandidateRelationInstance, doc: Document, alias_groups: AliasGroups
) -> list[set[int]]:
    """Per argument slot, sentence indices of all mentions of the argument
    entity and its alias-related entities."""
    out = []
    for eid in candidate.arg_entity_ids:
        group = alias_groups.group_of(eid)
        sents = {m.sentence_index for m in doc.mentions if m.entity_id in group}
        if not sents:
            raise ValueError(
                f"candidate argument {eid!r} has no mentions in {doc.doc_id!r}"
            )
        out.append(sents)
    return out


def span(
    candidate: CandidateRelationInstance, doc: Document, alias_groups: AliasGroups
) -> tuple[int, int]:
    """Sentence range (first, last), inclusive, covering all argument
    mentions including aliases."""
    sents = _argument_sentences(candidate, doc, alias_groups)
    all_s = set().union(*sents)
    return min(all_s), max(all_s)


def minimal_span(
    candidate: CandidateRelationInstance, doc: Document, alias_groups: AliasGroups
) -> int:
    """Max over argument pairs of the minimum sentence separation between
    their mentions (aliases included)."""
    sents = _argument_sentences(candidate, doc, alias_groups)
    worst = 0
    for i in range(len(sents)):
        for j in range(i + 1, len(sents)):
            d = min(abs(a - b) for a in sents[i] for b in sents[j])
            worst = max(worst, d)
    return worst


def filter_candidates(
    cands: list[CandidateRelationInstance],
    doc: Document,
    alias_groups: AliasGroups,
    threshold: int,
) -> list[CandidateRelationInstance]:
    """Retain candidates with minimal_span <= threshold."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return [c for c in cands if minimal_span(c, doc, alias_groups) <= threshold]


def similar(
    a: CandidateRelationInstance,
    b: CandidateRelationInstance,
    alias_groups: AliasGroups,
) -> bool:
    """True iff corresponding arguments are identical or alias-related,
    slot-wise (never under permutation)."""
    if a.arity != b.arity:
        raise ValueError("candidates have different arities")
    if a.doc_id != b.doc_id:
        return False
    return all(
        alias_groups.same_group(x, y)
        for x, y in zip(a.arg_entity_ids, b.arg_entity_ids)
    )


def group_key(
    arg_entity_ids: tuple[str, ...], alias_groups: AliasGroups
) -> tuple[frozenset[str], ...]:
    """Canonical per-slot alias-group key; equal keys <=> similar tuples."""
    return tuple(alias_groups.group_of(eid) for eid in arg_entity_ids)


def group_candidates(
    cands: list[CandidateRelationInstance], alias_groups: AliasGroups
) -> list[CandidateGroup]:
    """Partition candidates into groups of pairwise-similar instances.

    Slot-wise alias groups form an equivalence relation, so grouping by key
    is already the transitive closure of `similar`.
    """
    buckets: dict[tuple, list[CandidateRelationInstance]] = {}
    for c in cands:
        buckets.setdefault(group_key(c.arg_entity_ids, alias_groups), []).append(c)
    return [
        CandidateGroup(ms[0].doc_id, tuple(ms))
        for ms in buckets.values()
    ]


def label_candidates(
    cands: list[CandidateRelationInstance],
    gold: list[RelationAnnotation],
    alias_groups: AliasGroups,
) -> list[CandidateRelationInstance]:
    """Label each candidate positive iff it is similar to any gold tuple."""
    gold_keys = {group_key(g.arg_entity_ids, alias_groups) for g in gold}
    return [
        replace(c, label=group_key(c.arg_entity_ids, alias_groups) in gold_keys)
        for c in cands
    ]
