"""Default English stopword list for sequence construction.

Function words only: articles, pronouns, auxiliaries, modals, conjunctions,
demonstratives, quantifier determiners, and clitics.  Prepositions are
deliberately NOT stopwords — tokens like "of", "in", "with", "by", "to",
"after" often carry the relational cue and stay in the sequence.  Negators
("not", "no") are also kept as signal.  Override with --stopwords.
"""

from __future__ import annotations

STOPWORDS = frozenset(
    """
    a an the
    i me my mine myself
    we us our ours ourselves
    you your yours yourself yourselves
    he him his himself
    she her hers herself
    it its itself
    they them their theirs themselves
    who whom whose which what that
    this these those
    one ones
    someone anyone everyone
    something anything everything
    somebody anybody everybody
    am is are was were be been being
    do does did doing done
    have has had having
    can could may might must shall should will would ought
    and or but nor so yet
    if because although though while whereas unless whether
    when where why how
    there here
    then than
    also too very just quite rather
    both either neither
    each every all any some
    few several many much more most
    such same own other another
    's 're 've 'll 'd 'm n't
    """.split()
)


def load_stopwords(path) -> frozenset[str]:
    """Read one stopword per line; blank lines and #-comments ignored."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            w = line.strip()
            if w and not w.startswith("#"):
                words.add(w.lower())
    return frozenset(words)
