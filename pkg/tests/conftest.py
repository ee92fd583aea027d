import os

import pytest

from derivkit.morpho import Affix, AffixKind, Lexicon

GOLDEN_PREFIXES = [
    "un", "anti", "non", "re", "pre", "post", "over", "under",
    "inter", "mis", "pro", "auto", "super", "mini", "multi", "hyper",
]
GOLDEN_SUFFIXES = [
    "able", "ness", "ity", "er", "ize", "ful", "less", "ish",
    "ment", "y", "ist", "hood", "dom", "ism",
]
GOLDEN_BASES = [
    "wear", "google", "boxing", "happy", "walk", "applicable", "read",
    "readable", "sense", "heat", "human", "cook", "stellar", "market",
    "play", "hero", "game", "player", "kind", "dark", "empty", "crazy",
    "celebrity", "swim", "plan", "flat", "love", "believe", "move",
    "real", "modern", "color", "hope", "harm", "child", "fool", "treat",
    "rain", "dirt", "guitar", "novel", "free", "teach", "homework",
    "nickname", "brew", "copyright", "wash", "legal", "tragic",
    "lightweight", "abnormal", "blockbuster", "takeover", "alaska",
    "reliable", "stable", "dense", "pure", "exclusive", "active",
    "useless", "virus", "stop", "build", "rest", "action", "fortune",
    "fascist",
]
GOLDEN_STOPWORDS = ["the", "and", "with", "this", "that", "have"]


@pytest.fixture(scope="session")
def golden_lexicon() -> Lexicon:
    return Lexicon(
        prefixes=frozenset(Affix(AffixKind.PREFIX, p) for p in GOLDEN_PREFIXES),
        suffixes=frozenset(Affix(AffixKind.SUFFIX, s) for s in GOLDEN_SUFFIXES),
        bases=frozenset(GOLDEN_BASES),
        stopwords=frozenset(GOLDEN_STOPWORDS),
    )


def bert_vocab_path():
    """Full BERT-base vocab fixture; integration tests skip without it."""
    candidates = [
        os.environ.get("DERIVKIT_BERT_VOCAB"),
        os.path.join(os.path.dirname(__file__), "fixtures", "bert-base-uncased-vocab.txt"),
    ]
    for c in candidates:
        if c and os.path.exists(c):
            return c
    return None


needs_bert_vocab = pytest.mark.skipif(
    bert_vocab_path() is None,
    reason="BERT-base vocab fixture not supplied",
)
