"""Generalized sequence representations of candidate relation instances.

A sequence position is a small set of symbols from disjoint namespaces:
argument-entity tokens ("E:3"), the sentence break ("SB"), other-entity
tokens ("OE:ORG"), words ("W:succeeds") and word-cluster ids ("C:c12").
Namespacing keeps e.g. a literal word "sb" distinct from the break token.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .candidates import CandidateRelationInstance, span
from .corpus import AliasGroups, Document


def arg_symbol(i: int) -> str:
    return f"E:{i}"


def sb_symbol() -> str:
    return "SB"


def other_symbol(entity_type: str) -> str:
    return f"OE:{entity_type}"


def word_symbol(word: str) -> str:
    return f"W:{word}"


def cluster_symbol(cluster_id: str) -> str:
    return f"C:{cluster_id}"


@dataclass(frozen=True)
class GeneralizedToken:
    symbols: frozenset[str]

    @classmethod
    def arg(cls, i: int) -> "GeneralizedToken":
        return cls(frozenset([arg_symbol(i)]))

    @classmethod
    def sentence_break(cls) -> "GeneralizedToken":
        return cls(frozenset([sb_symbol()]))

    @classmethod
    def other(cls, entity_type: str) -> "GeneralizedToken":
        return cls(frozenset([other_symbol(entity_type)]))

    @classmethod
    def word(cls, w: str, cluster_id: str | None = None) -> "GeneralizedToken":
        syms = {word_symbol(w)}
        if cluster_id is not None:
            syms.add(cluster_symbol(cluster_id))
        return cls(frozenset(syms))

    @property
    def kind(self) -> str:
        s = next(iter(self.symbols))
        if len(self.symbols) == 1:
            if s.startswith("E:"):
                return "arg"
            if s == "SB":
                return "sb"
            if s.startswith("OE:"):
                return "other"
        return "word"

    @property
    def arg_index(self) -> int | None:
        if self.kind != "arg":
            return None
        return int(next(iter(self.symbols))[2:])

    def to_json(self) -> list:
        k = self.kind
        if k == "arg":
            return ["E", self.arg_index]
        if k == "sb":
            return ["SB"]
        if k == "other":
            return ["OE", next(iter(self.symbols))[3:]]
        word = cluster = None
        for s in self.symbols:
            if s.startswith("W:"):
                word = s[2:]
            elif s.startswith("C:"):
                cluster = s[2:]
        if cluster is None:
            return ["W", word]
        return ["W", word, "C", cluster]

    @classmethod
    def from_json(cls, arr: list) -> "GeneralizedToken":
        tag = arr[0]
        if tag == "E":
            return cls.arg(int(arr[1]))
        if tag == "SB":
            return cls.sentence_break()
        if tag == "OE":
            return cls.other(arr[1])
        if tag == "W":
            return cls.word(arr[1], arr[3] if len(arr) > 2 else None)
        raise ValueError(f"unknown token tag {tag!r}")


@dataclass(frozen=True)
class SequenceRepresentation:
    tokens: tuple[GeneralizedToken, ...]
    arity: int
    doc_id: str = ""
    arg_entity_ids: tuple[str, ...] = ()
    # orderable content key: used for kernel caching, dedup and exact symmetry
    key: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(
            self, "key", tuple(tuple(sorted(t.symbols)) for t in self.tokens)
        )

    def __len__(self) -> int:
        return len(self.tokens)

    def check(self) -> None:
        """Assert structural invariants (no boundary/adjacent breaks, all
        argument tokens present)."""
        kinds = [t.kind for t in self.tokens]
        if kinds and (kinds[0] == "sb" or kinds[-1] == "sb"):
            raise ValueError("sequence starts or ends with a sentence break")
        if any(a == b == "sb" for a, b in zip(kinds, kinds[1:])):
            raise ValueError("adjacent sentence breaks")
        seen = {t.arg_index for t in self.tokens if t.kind == "arg"}
        missing = set(range(1, self.arity + 1)) - seen
        if missing:
            raise ValueError(f"sequence lacks argument tokens {sorted(missing)}")

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "arg_entity_ids": list(self.arg_entity_ids),
            "arity": self.arity,
            "tokens": [t.to_json() for t in self.tokens],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SequenceRepresentation":
        return cls(
            tuple(GeneralizedToken.from_json(a) for a in obj["tokens"]),
            obj["arity"],
            obj.get("doc_id", ""),
            tuple(obj.get("arg_entity_ids", ())),
        )


def _has_alnum(tok: str) -> bool:
    return any(ch.isalnum() for ch in tok)


def build_sequence(
    doc: Document,
    candidate: CandidateRelationInstance,
    alias_groups: AliasGroups,
    clusters: dict[str, str] | None = None,
    stopwords: frozenset[str] | None = None,
) -> SequenceRepresentation:
    """Scan the candidate's span and emit tokens in document order.

    Mentions of argument entities (or their aliases) become argument tokens;
    mentions of other entities whose type is in the relation signature become
    other-entity tokens; remaining words are lowercased, stopword-filtered,
    punctuation-only tokens dropped, and cluster-generalized when mapped.
    Mentions of entities with out-of-signature types pass through as words.
    Sentence gaps inside the span emit one break token each, collapsed so the
    result never starts/ends with a break or holds two in a row.
    """
    if stopwords is None:
        from .stopwords import STOPWORDS as stopwords
    clusters = clusters or {}

    slot_of_entity: dict[str, int] = {}
    for slot, eid in enumerate(candidate.arg_entity_ids, start=1):
        for member in alias_groups.group_of(eid):
            slot_of_entity[member] = slot

    sig_types = set()
    types_by_entity: dict[str, str] = {}
    for m in doc.mentions:
        types_by_entity[m.entity_id] = m.entity_type
    for eid in candidate.arg_entity_ids:
        sig_types.add(types_by_entity[eid])

    first, last = span(candidate, doc, alias_groups)
    chunks: list[list[GeneralizedToken]] = []
    for si in range(first, last + 1):
        a, b = doc.sentences[si]
        in_sentence = [m for m in doc.mentions if m.sentence_index == si]
        tracked = [
            m
            for m in in_sentence
            if m.entity_id in slot_of_entity or m.entity_type in sig_types
        ]
        # overlap resolution: longest match wins, ties leftmost
        chosen: list = []
        for m in sorted(
            tracked, key=lambda m: (m.token_span[0] - m.token_span[1], m.token_span[0])
        ):
            if all(
                m.token_span[1] <= c.token_span[0] or m.token_span[0] >= c.token_span[1]
                for c in chosen
            ):
                chosen.append(m)
        starts = {m.token_span[0]: m for m in chosen}
        out: list[GeneralizedToken] = []
        pos = a
        while pos < b:
            m = starts.get(pos)
            if m is not None:
                slot = slot_of_entity.get(m.entity_id)
                if slot is not None:
                    out.append(GeneralizedToken.arg(slot))
                else:
                    out.append(GeneralizedToken.other(m.entity_type))
                pos = m.token_span[1]
                continue
            w = doc.tokens[pos].lower()
            pos += 1
            if w in stopwords or not _has_alnum(w):
                continue
            out.append(GeneralizedToken.word(w, clusters.get(w)))
        chunks.append(out)

    tokens: list[GeneralizedToken] = []
    for chunk in chunks:
        if tokens and chunk:
            tokens.append(GeneralizedToken.sentence_break())
        tokens.extend(chunk)

    seq = SequenceRepresentation(
        tuple(tokens), candidate.arity, doc.doc_id, candidate.arg_entity_ids
    )
    seq.check()
    return seq
