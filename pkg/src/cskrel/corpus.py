"""Canonical document model, corpus JSONL I/O, and rule-based alias resolution.

A corpus file holds one JSON object per line, with three record kinds:

    {"kind": "document", "doc_id": ..., "sentences": [[tok, ...], ...]}
    {"kind": "entity", "doc_id": ..., "entity_id": ..., "entity_type": ...,
     "mentions": [{"sentence_index": i, "token_start": s, "token_end": e}, ...]}
    {"kind": "relation", "doc_id": ..., "relation_name": ..., "arg_entity_ids": [...]}

Mention token offsets are sentence-local in the file and converted to
document-level token spans on load.  Records may appear in any order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

ALIAS_RULESETS = ("biomedical-bacteria", "biomedical-prefix", "general")

_HONORIFICS = ("mr.", "ms.", "mrs.")


class CorpusError(ValueError):
    """Raised on malformed corpus files or model-invariant violations."""


@dataclass(frozen=True)
class EntityMention:
    mention_id: str
    entity_id: str
    entity_type: str
    sentence_index: int
    token_span: tuple[int, int]  # document-level [start, end)
    surface: str


@dataclass(frozen=True)
class Entity:
    entity_id: str
    entity_type: str
    canonical_surface: str  # surface of the first mention in document order
    mention_ids: tuple[str, ...]


@dataclass(frozen=True)
class RelationSignature:
    relation_name: str
    arg_types: tuple[str, ...]

    def __post_init__(self):
        if len(self.arg_types) < 2:
            raise CorpusError("relation signature needs arity >= 2")
        if not self.relation_name or any(not t for t in self.arg_types):
            raise CorpusError("relation name and argument types must be nonempty")

    @property
    def arity(self) -> int:
        return len(self.arg_types)


@dataclass(frozen=True)
class RelationAnnotation:
    relation_name: str
    arg_entity_ids: tuple[str, ...]


@dataclass
class Document:
    doc_id: str
    sentences: list[tuple[int, int]]  # per-sentence [start, end) token ranges
    tokens: list[str]
    token_offsets: list[tuple[int, int]]  # char offsets in the joined text
    mentions: list[EntityMention] = field(default_factory=list)

    def sentence_of_token(self, tok_idx: int) -> int:
        for si, (a, b) in enumerate(self.sentences):
            if a <= tok_idx < b:
                return si
        raise IndexError(f"token index {tok_idx} outside document {self.doc_id}")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class Corpus:
    signature: RelationSignature
    documents: list[Document]
    entities: dict[str, dict[str, Entity]]  # doc_id -> entity_id -> Entity
    gold: dict[str, list[RelationAnnotation]]  # doc_id -> annotations

    def doc(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)


def _norm(surface: str) -> str:
    return " ".join(surface.split()).lower()


def _first_word_short_form(a: str, b: str) -> bool:
    # first word of one is the other's first word abbreviated to "X.", rest equal
    wa, wb = a.split(), b.split()
    if len(wa) != len(wb) or not wa:
        return False
    if wa[1:] != wb[1:]:
        return False
    fa, fb = wa[0], wb[0]
    return fa == fb[0] + "." or fb == fa[0] + "."


def _prefix_over_half(a: str, b: str) -> bool:
    if a.startswith(b):
        a, b = b, a
    return b.startswith(a) and len(a) > len(b) / 2


def _honorific_suffix(a: str, b: str) -> bool:
    # "mr./ms./mrs. X" where X is a suffix of the other mention
    for x, y in ((a, b), (b, a)):
        words = x.split()
        if len(words) >= 2 and words[0] in _HONORIFICS and y.endswith(words[-1]):
            return True
    return False


def _ceo_rule(a: str, b: str) -> bool:
    for x, y in ((a, b), (b, a)):
        if x.startswith("chief executive") and y == "ceo":
            return True
    return False


def are_aliases(
    surface_a: str,
    surface_b: str,
    rules: str,
    entity_type: str | None = None,
) -> bool:
    """True iff any rule of `rules` links the two surfaces.

    Comparison is case-insensitive with internal whitespace collapsed.
    `entity_type` (shared by both surfaces, aliasing being within-type) is
    consulted only by the general ruleset, whose bare-suffix rule is disabled
    for POST entities; all rulesets are symmetric in the two surfaces.
    """
    if rules not in ALIAS_RULESETS:
        raise ValueError(f"unknown alias ruleset {rules!r}")
    a, b = _norm(surface_a), _norm(surface_b)
    if not a or not b:
        raise ValueError("alias comparison needs nonempty surfaces")
    if a == b:
        return True
    if rules == "biomedical-bacteria":
        return _first_word_short_form(a, b) or _prefix_over_half(a, b)
    if rules == "biomedical-prefix":
        return a.startswith(b) or b.startswith(a)
    # general: prefix, CEO special case, honorific+surname, bare suffix (not for POST)
    if a.startswith(b) or b.startswith(a):
        return True
    if _ceo_rule(a, b):
        return True
    if _honorific_suffix(a, b):
        return True
    if entity_type != "POST" and (a.endswith(b) or b.endswith(a)):
        return True
    return False


class AliasGroups:
    """Partition of one document's entity ids into alias groups."""

    def __init__(self, groups: list[frozenset[str]]):
        self.groups = groups
        self._index = {eid: gi for gi, grp in enumerate(groups) for eid in grp}

    def group_of(self, entity_id: str) -> frozenset[str]:
        gi = self._index.get(entity_id)
        if gi is None:
            return frozenset([entity_id])
        return self.groups[gi]

    def same_group(self, a: str, b: str) -> bool:
        if a == b:
            return True
        ga, gb = self._index.get(a), self._index.get(b)
        return ga is not None and ga == gb

    def __len__(self) -> int:
        return len(self.groups)


def alias_closure(entities: list[Entity], rules: str) -> AliasGroups:
    """Transitive closure of pairwise `are_aliases` over canonical surfaces.

    Only entities of the same type may be grouped.  Returns a partition
    covering every input entity exactly once.
    """
    ids = [e.entity_id for e in entities]
    parent = {i: i for i in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, ea in enumerate(entities):
        for eb in entities[i + 1 :]:
            if ea.entity_type != eb.entity_type:
                continue
            if are_aliases(
                ea.canonical_surface, eb.canonical_surface, rules, ea.entity_type
            ):
                parent[find(ea.entity_id)] = find(eb.entity_id)

    buckets: dict[str, set[str]] = {}
    for i in ids:
        buckets.setdefault(find(i), set()).add(i)
    # deterministic group order: by smallest member id
    groups = [frozenset(g) for g in buckets.values()]
    groups.sort(key=min)
    return AliasGroups(groups)


def _as_int(obj, key, where):
    v = obj.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise CorpusError(f"{where}: {key} must be a non-negative integer")
    return v


def _as_str(obj, key, where):
    v = obj.get(key)
    if not isinstance(v, str) or not v:
        raise CorpusError(f"{where}: {key} must be a nonempty string")
    return v


def load_corpus(path, signature: RelationSignature) -> Corpus:
    """Load and validate a canonical-format JSONL corpus.

    Errors carry the offending line number or the document and field name.
    Relation records whose relation_name differs from the signature's are
    ignored (a corpus may carry annotations for several relation types).
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"line {ln}: invalid JSON ({e.msg})") from e
            if not isinstance(obj, dict):
                raise CorpusError(f"line {ln}: record must be a JSON object")
            records.append((ln, obj))
    return corpus_from_records(records, signature)


def _document_from_record(doc_id: str, ln: int, obj: dict) -> Document:
    sents = obj.get("sentences")
    if not isinstance(sents, list) or any(
        not isinstance(s, list) or any(not isinstance(t, str) for t in s)
        for s in sents
    ):
        raise CorpusError(f"line {ln}: sentences must be arrays of token strings")
    tokens: list[str] = []
    ranges: list[tuple[int, int]] = []
    for s in sents:
        ranges.append((len(tokens), len(tokens) + len(s)))
        tokens.extend(s)
    offsets = []
    pos = 0
    for t in tokens:
        offsets.append((pos, pos + len(t)))
        pos += len(t) + 1  # single-space joined text
    return Document(doc_id, ranges, tokens, offsets)


def load_documents(path) -> list[Document]:
    """Load only the document records from a JSONL corpus (no entities or
    relations required) — enough for vocabulary work."""
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"line {ln}: invalid JSON ({e.msg})") from e
            if isinstance(obj, dict) and obj.get("kind") == "document":
                doc_id = _as_str(obj, "doc_id", f"line {ln}")
                if doc_id in seen:
                    raise CorpusError(f"line {ln}: duplicate document {doc_id!r}")
                seen.add(doc_id)
                docs.append(_document_from_record(doc_id, ln, obj))
    return docs


def corpus_from_records(records, signature: RelationSignature) -> Corpus:
    """Assemble and validate a corpus from (line_number, record) pairs."""
    doc_recs: dict[str, tuple[int, dict]] = {}
    ent_recs: list[tuple[int, dict]] = []
    rel_recs: list[tuple[int, dict]] = []
    for ln, obj in records:
        kind = obj.get("kind")
        if kind == "document":
            doc_id = _as_str(obj, "doc_id", f"line {ln}")
            if doc_id in doc_recs:
                raise CorpusError(f"line {ln}: duplicate document {doc_id!r}")
            doc_recs[doc_id] = (ln, obj)
        elif kind == "entity":
            ent_recs.append((ln, obj))
        elif kind == "relation":
            rel_recs.append((ln, obj))
        else:
            raise CorpusError(f"line {ln}: unknown record kind {kind!r}")

    documents: list[Document] = []
    docs_by_id: dict[str, Document] = {}
    for doc_id, (ln, obj) in doc_recs.items():
        doc = _document_from_record(doc_id, ln, obj)
        documents.append(doc)
        docs_by_id[doc_id] = doc

    entities: dict[str, dict[str, Entity]] = {d.doc_id: {} for d in documents}
    for ln, obj in ent_recs:
        doc_id = _as_str(obj, "doc_id", f"line {ln}")
        entity_id = _as_str(obj, "entity_id", f"line {ln}")
        entity_type = _as_str(obj, "entity_type", f"line {ln}")
        doc = docs_by_id.get(doc_id)
        if doc is None:
            raise CorpusError(f"line {ln}: entity in unknown document {doc_id!r}")
        if entity_id in entities[doc_id]:
            raise CorpusError(
                f"line {ln}: duplicate entity {entity_id!r} in document {doc_id!r}"
            )
        mrecs = obj.get("mentions")
        if not isinstance(mrecs, list) or not mrecs:
            raise CorpusError(
                f"document {doc_id!r} entity {entity_id!r}: mentions must be nonempty"
            )
        mentions = []
        for k, m in enumerate(mrecs):
            where = f"document {doc_id!r} entity {entity_id!r} mention {k}"
            si = _as_int(m, "sentence_index", where)
            ts = _as_int(m, "token_start", where)
            te = m.get("token_end")
            if not isinstance(te, int) or te <= ts:
                raise CorpusError(f"{where}: token_end must exceed token_start")
            if si >= len(doc.sentences):
                raise CorpusError(f"{where}: sentence_index out of range")
            a, b = doc.sentences[si]
            if a + te > b:
                raise CorpusError(f"{where}: token span crosses sentence boundary")
            span = (a + ts, a + te)
            surface = " ".join(doc.tokens[span[0] : span[1]])
            mentions.append(
                EntityMention(f"{entity_id}:{k}", entity_id, entity_type, si, span, surface)
            )
        mentions.sort(key=lambda m: m.token_span)
        entities[doc_id][entity_id] = Entity(
            entity_id,
            entity_type,
            mentions[0].surface,
            tuple(m.mention_id for m in mentions),
        )
        doc.mentions.extend(mentions)

    for doc in documents:
        doc.mentions.sort(key=lambda m: m.token_span)

    gold: dict[str, list[RelationAnnotation]] = {d.doc_id: [] for d in documents}
    for ln, obj in rel_recs:
        doc_id = _as_str(obj, "doc_id", f"line {ln}")
        name = _as_str(obj, "relation_name", f"line {ln}")
        if name != signature.relation_name:
            continue
        if doc_id not in docs_by_id:
            raise CorpusError(f"line {ln}: relation in unknown document {doc_id!r}")
        ids = obj.get("arg_entity_ids")
        if not isinstance(ids, list) or any(not isinstance(i, str) for i in ids):
            raise CorpusError(f"line {ln}: arg_entity_ids must be a string array")
        if len(ids) != signature.arity:
            raise CorpusError(
                f"line {ln}: relation arity {len(ids)} != signature arity"
                f" {signature.arity}"
            )
        for slot, (eid, et) in enumerate(zip(ids, signature.arg_types)):
            ent = entities[doc_id].get(eid)
            if ent is None:
                raise CorpusError(f"line {ln}: relation references unknown entity {eid!r}")
            if ent.entity_type != et:
                raise CorpusError(
                    f"line {ln}: argument {slot} has type {ent.entity_type!r},"
                    f" signature requires {et!r}"
                )
        gold[doc_id].append(RelationAnnotation(name, tuple(ids)))

    return Corpus(signature, documents, entities, gold)


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus back to the canonical JSONL format (round-trips load_corpus)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            sents = [doc.tokens[a:b] for a, b in doc.sentences]
            fh.write(
                json.dumps(
                    {"kind": "document", "doc_id": doc.doc_id, "sentences": sents}
                )
                + "\n"
            )
            by_entity: dict[str, list[EntityMention]] = {}
            for m in doc.mentions:
                by_entity.setdefault(m.entity_id, []).append(m)
            for eid in sorted(by_entity):
                ms = by_entity[eid]
                recs = []
                for m in ms:
                    a, _ = doc.sentences[m.sentence_index]
                    recs.append(
                        {
                            "sentence_index": m.sentence_index,
                            "token_start": m.token_span[0] - a,
                            "token_end": m.token_span[1] - a,
                        }
                    )
                fh.write(
                    json.dumps(
                        {
                            "kind": "entity",
                            "doc_id": doc.doc_id,
                            "entity_id": eid,
                            "entity_type": ms[0].entity_type,
                            "mentions": recs,
                        }
                    )
                    + "\n"
                )
            for rel in corpus.gold.get(doc.doc_id, []):
                fh.write(
                    json.dumps(
                        {
                            "kind": "relation",
                            "doc_id": doc.doc_id,
                            "relation_name": rel.relation_name,
                            "arg_entity_ids": list(rel.arg_entity_ids),
                        }
                    )
                    + "\n"
                )


def validation_report(corpus: Corpus) -> str:
    """Per-document summary used by the validate-corpus CLI subcommand."""
    lines = []
    for doc in corpus.documents:
        ents = corpus.entities[doc.doc_id]
        lines.append(
            f"{doc.doc_id}: {len(doc.sentences)} sentences, {len(doc.tokens)} tokens,"
            f" {len(ents)} entities, {len(doc.mentions)} mentions,"
            f" {len(corpus.gold[doc.doc_id])} gold relations"
        )
    lines.append(f"OK: {len(corpus.documents)} documents")
    return "\n".join(lines)
