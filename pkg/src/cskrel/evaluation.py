"""Group-level (RIGD) and mention-level scoring of predictions against gold.

Group-level scoring partitions predicted positive tuples and gold tuples of
each document into alias groups; a true positive is one predicted group whose
key matches a gold group, a false positive a predicted group matching none,
and a false negative a gold group never predicted.  Matching on canonical
group keys makes the counting order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .candidates import CandidateRelationInstance, group_key
from .corpus import AliasGroups, RelationAnnotation


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    accuracy: float | None = None
    per_document: dict[str, dict] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        if self.accuracy is not None:
            out["accuracy"] = self.accuracy
        if self.per_document:
            out["per_document"] = self.per_document
        return out

    def table(self) -> str:
        """One-decimal percentage view (the machine-readable JSON keeps full
        precision)."""
        cells = [
            f"P {100 * self.precision:.1f}",
            f"R {100 * self.recall:.1f}",
            f"F {100 * self.f1:.1f}",
        ]
        if self.accuracy is not None:
            cells.append(f"Acc {100 * self.accuracy:.1f}")
        counts = f"tp={self.tp} fp={self.fp} fn={self.fn}"
        return "  ".join(cells) + "  " + counts


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def evaluate_rigd(
    predicted: list[CandidateRelationInstance],
    gold: dict[str, list[RelationAnnotation]],
    alias_groups: dict[str, AliasGroups],
) -> EvalReport:
    """Score positively-predicted candidates against gold at group level.

    `gold` and `alias_groups` map doc_id to that document's annotations and
    alias partition; predictions carry their own doc_id.
    """
    pred_keys: dict[str, set] = {}
    for c in predicted:
        ag = alias_groups[c.doc_id]
        pred_keys.setdefault(c.doc_id, set()).add(group_key(c.arg_entity_ids, ag))

    tp = fp = fn = 0
    per_doc: dict[str, dict] = {}
    for doc_id in sorted(set(pred_keys) | set(gold)):
        ag = alias_groups[doc_id]
        gk = {group_key(g.arg_entity_ids, ag) for g in gold.get(doc_id, [])}
        pk = pred_keys.get(doc_id, set())
        d_tp = len(pk & gk)
        d_fp = len(pk - gk)
        d_fn = len(gk - pk)
        tp, fp, fn = tp + d_tp, fp + d_fp, fn + d_fn
        per_doc[doc_id] = {"tp": d_tp, "fp": d_fp, "fn": d_fn}

    p, r, f = _prf(tp, fp, fn)
    return EvalReport(tp, fp, fn, p, r, f, per_document=per_doc)


def evaluate_mention(predicted_labels, gold_labels) -> EvalReport:
    """Per-candidate positive-class P/R/F plus overall accuracy."""
    if len(predicted_labels) != len(gold_labels):
        raise ValueError("prediction/gold length mismatch")
    tp = fp = fn = tn = 0
    for p, g in zip(predicted_labels, gold_labels):
        p, g = bool(p), bool(g)
        if p and g:
            tp += 1
        elif p and not g:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    prec, rec, f = _prf(tp, fp, fn)
    total = tp + fp + fn + tn
    acc = (tp + tn) / total if total else 0.0
    return EvalReport(tp, fp, fn, prec, rec, f, accuracy=acc)


def average_reports(reports: list[EvalReport]) -> EvalReport:
    """Fold averaging: mean of the metrics (not pooled counts); counts are
    summed for reference."""
    if not reports:
        raise ValueError("no reports to average")
    k = len(reports)
    acc = None
    if all(r.accuracy is not None for r in reports):
        acc = sum(r.accuracy for r in reports) / k
    return EvalReport(
        tp=sum(r.tp for r in reports),
        fp=sum(r.fp for r in reports),
        fn=sum(r.fn for r in reports),
        precision=sum(r.precision for r in reports) / k,
        recall=sum(r.recall for r in reports) / k,
        f1=sum(r.f1 for r in reports) / k,
        accuracy=acc,
    )
