"""Document-scoped N-ary cross-sentence relation extraction toolkit.

Pipeline: load a corpus of documents with entity mentions, generate candidate
relation tuples, build generalized sequence representations of their spans,
score similarity with a constrained subsequence kernel, train SVM / MaxEnt
classifiers, and evaluate predictions at group (RIGD) level.
"""

__version__ = "0.1.0"

from .corpus import (
    AliasGroups,
    Corpus,
    CorpusError,
    Document,
    Entity,
    EntityMention,
    RelationAnnotation,
    RelationSignature,
    alias_closure,
    are_aliases,
    load_corpus,
    save_corpus,
)
from .candidates import (
    CandidateGroup,
    CandidateRelationInstance,
    filter_candidates,
    generate_candidates,
    group_candidates,
    label_candidates,
    minimal_span,
    similar,
    span,
)
from .seqrep import GeneralizedToken, SequenceRepresentation, build_sequence
from .kernel import (
    KernelParams,
    common_count,
    csk,
    csk_final,
    csk_pairsum,
    gram_matrix,
    gsk,
    ncsk,
    oracle_csk,
    oracle_gsk,
)
from .clusters import cluster_words, load_embeddings
from .classifiers import (
    MaxEntModel,
    SvmModel,
    class_balance_weights,
    extract_features,
    predict_maxent,
    predict_svm,
    train_maxent,
    train_svm,
)
from .evaluation import EvalReport, average_reports, evaluate_mention, evaluate_rigd
