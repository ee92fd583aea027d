"""Affix lexicon construction and analysis/generation of derivatives.

A derivative is a base plus at most one prefix and at most one suffix
(shapes P, S, PS).  Generation applies a small set of morpho-orthographic
spelling rules (e-deletion, consonant doubling, y/i alternation, the
able/abil alternation before "ity"); analysis inverts them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

VOWELS = frozenset("aeiou")

# Final consonants never doubled before a vowel-initial suffix.
NO_DOUBLE = frozenset("wxy")


class AffixKind(Enum):
    PREFIX = "prefix"
    SUFFIX = "suffix"


class Shape(Enum):
    P = "P"
    S = "S"
    PS = "PS"


@dataclass(frozen=True, order=True)
class Affix:
    kind: AffixKind
    form: str

    def __post_init__(self):
        if not self.form or not self.form.isalpha() or not self.form.islower():
            raise ValueError(f"affix form must be non-empty lowercase alphabetic: {self.form!r}")

    def __str__(self):
        return self.form


def prefix(form: str) -> Affix:
    return Affix(AffixKind.PREFIX, form)


def suffix(form: str) -> Affix:
    return Affix(AffixKind.SUFFIX, form)


@dataclass(frozen=True, order=True)
class AffixBundle:
    """At most one prefix and one suffix; never empty.

    The canonical label juxtaposes prefix and "##"-marked suffix,
    e.g. "un##able", "anti", "ness".
    """

    prefix: Optional[Affix] = None
    suffix: Optional[Affix] = None

    def __post_init__(self):
        if self.prefix is None and self.suffix is None:
            raise ValueError("affix bundle must contain at least one affix")
        if self.prefix is not None and self.prefix.kind is not AffixKind.PREFIX:
            raise ValueError("prefix slot holds a non-prefix affix")
        if self.suffix is not None and self.suffix.kind is not AffixKind.SUFFIX:
            raise ValueError("suffix slot holds a non-suffix affix")

    @property
    def shape(self) -> Shape:
        if self.prefix is not None and self.suffix is not None:
            return Shape.PS
        return Shape.P if self.prefix is not None else Shape.S

    @property
    def label(self) -> str:
        if self.prefix is not None and self.suffix is not None:
            return f"{self.prefix.form}##{self.suffix.form}"
        if self.prefix is not None:
            return self.prefix.form
        return self.suffix.form

    @classmethod
    def from_label(cls, label: str) -> "AffixBundle":
        if "##" in label:
            p, s = label.split("##", 1)
            if p:
                return cls(prefix=prefix(p), suffix=suffix(s))
            return cls(suffix=suffix(s))
        return cls(prefix=prefix(label))

    def __str__(self):
        return self.label


def bundle(prefix_form: Optional[str] = None, suffix_form: Optional[str] = None) -> AffixBundle:
    return AffixBundle(
        prefix=prefix(prefix_form) if prefix_form else None,
        suffix=suffix(suffix_form) if suffix_form else None,
    )


@dataclass(frozen=True)
class Lexicon:
    """Immutable inventory of prefixes, suffixes, bases, and stopwords."""

    prefixes: frozenset[Affix]
    suffixes: frozenset[Affix]
    bases: frozenset[str]
    stopwords: frozenset[str]

    def __post_init__(self):
        affix_forms = {a.form for a in self.prefixes} | {a.form for a in self.suffixes}
        overlap = self.bases & affix_forms
        if overlap:
            raise ValueError(f"bases overlap affix forms: {sorted(overlap)[:5]}")
        bad = [b for b in self.bases if not b.isalpha() or len(b) <= 3]
        if bad:
            raise ValueError(f"bases must be alphabetic with length > 3: {sorted(bad)[:5]}")
        if self.bases & self.stopwords:
            raise ValueError("bases overlap stopwords")

    @property
    def prefix_forms(self) -> set[str]:
        return {a.form for a in self.prefixes}

    @property
    def suffix_forms(self) -> set[str]:
        return {a.form for a in self.suffixes}


@dataclass(frozen=True)
class Derivation:
    surface: str
    base: str
    bundle: AffixBundle

    @property
    def shape(self) -> Shape:
        return self.bundle.shape

    @property
    def num_affixes(self) -> int:
        return int(self.bundle.prefix is not None) + int(self.bundle.suffix is not None)


def build_lexicon(
    vocab: Iterable[str],
    prefix_candidates: Iterable[str],
    suffix_candidates: Iterable[str],
    stopwords: Iterable[str] = (),
) -> Lexicon:
    """Select the affix inventory and base set from a subword vocabulary.

    Prefixes must occur as word-initial tokens, suffixes as word-internal
    ("##"-marked) tokens.  Bases are all remaining word-initial, fully
    alphabetic tokens longer than 3 characters, minus stopwords and the
    selected affix forms.
    """
    prefix_candidates = [p.lower() for p in prefix_candidates]
    suffix_candidates = [s.lower() for s in suffix_candidates]
    if not prefix_candidates or not suffix_candidates:
        raise ValueError("prefix and suffix candidate lists must be non-empty")

    tokens = set(vocab)
    if not any(t.startswith("##") for t in tokens):
        raise ValueError("malformed vocabulary: no word-internal ('##') tokens")

    prefixes = frozenset(prefix(p) for p in prefix_candidates if p in tokens)
    suffixes = frozenset(suffix(s) for s in suffix_candidates if "##" + s in tokens)
    stop = frozenset(w.lower() for w in stopwords)
    affix_forms = {a.form for a in prefixes} | {a.form for a in suffixes}
    bases = frozenset(
        t for t in tokens
        if not t.startswith("##")
        and t.isalpha()
        and len(t) > 3
        and t == t.lower()
        and t not in stop
        and t not in affix_forms
    )
    return Lexicon(prefixes=prefixes, suffixes=suffixes, bases=bases, stopwords=stop)


def _doubling_licensed(stem: str) -> bool:
    # CVC-final stems double the last consonant (run -> runnable);
    # w/x/y and vowel-final or cluster-final stems do not.
    if len(stem) < 2:
        return False
    last, prev = stem[-1], stem[-2]
    if last in VOWELS or last in NO_DOUBLE or not last.isalpha():
        return False
    if prev not in VOWELS:
        return False
    if len(stem) >= 3 and stem[-3] in VOWELS:
        return False
    return True


def derive_suffix_only(stem: str, sfx: Affix) -> set[str]:
    """All spellings of stem + suffix licensed by the rule set."""
    form = sfx.form
    out = {stem + form}
    vowel_initial = form[0] in VOWELS
    if vowel_initial and stem.endswith("e"):
        # e-deletion: google + able -> googlable
        out.add(stem[:-1] + form)
    if vowel_initial and _doubling_licensed(stem):
        # consonant doubling: run + able -> runnable
        out.add(stem + stem[-1] + form)
    if stem.endswith("y") and len(stem) >= 2 and stem[-2] not in VOWELS:
        # y -> i: happy + ness -> happiness
        out.add(stem[:-1] + "i" + form)
    if form == "ity" and stem.endswith("able") and len(stem) > 4:
        # able + ity -> ability: applicable -> applicability
        out.add(stem[:-4] + "ability")
    return out


def derive_prefix_only(stem: str, pfx: Affix) -> set[str]:
    # Prefixes attach without orthographic change.
    return {pfx.form + stem}


def derive(base: str, affix_bundle: AffixBundle) -> set[str]:
    """Forward generation: every surface spelling the rules license."""
    if not base or not base.isalpha():
        raise ValueError(f"base must be non-empty alphabetic: {base!r}")
    stems = {base}
    if affix_bundle.suffix is not None:
        stems = set().union(*(derive_suffix_only(s, affix_bundle.suffix) for s in stems))
    if affix_bundle.prefix is not None:
        stems = set().union(*(derive_prefix_only(s, affix_bundle.prefix) for s in stems))
    return stems


def strip_suffix(word: str, sfx: Affix) -> set[str]:
    """Candidate stems whose suffixation could have produced `word`.

    Candidates are proposed by inverting each rule, then confirmed by
    forward generation, so strip and derive stay exact adjoints.
    """
    form = sfx.form
    if not word.endswith(form) or len(word) <= len(form):
        return set()
    stem0 = word[: -len(form)]
    proposals = {stem0}
    if form[0] in VOWELS:
        proposals.add(stem0 + "e")
    if len(stem0) >= 2 and stem0[-1] == stem0[-2] and stem0[-1] not in VOWELS:
        proposals.add(stem0[:-1])
    if stem0.endswith("i"):
        proposals.add(stem0[:-1] + "y")
    if form == "ity" and stem0.endswith("abil"):
        proposals.add(stem0[:-4] + "able")
    return {
        s for s in proposals
        if s and s.isalpha() and word in derive_suffix_only(s, sfx)
    }


def strip_prefix(word: str, pfx: Affix) -> set[str]:
    """Candidate stems for prefix removal; tolerates one hyphen after the prefix."""
    form = pfx.form
    stems = set()
    if word.startswith(form + "-"):
        stems.add(word[len(form) + 1:])
    elif word.startswith(form):
        stems.add(word[len(form):])
    return {s for s in stems if s}


def analyze(
    word: str,
    lexicon: Lexicon,
    max_prefixes: int = 1,
    max_suffixes: int = 1,
) -> Optional[Derivation]:
    """Decompose `word` into base + affixes over the lexicon, or None.

    Words that are themselves bases are not derivatives.  Among competing
    decompositions: fewest affixes, then longest base, then suffix-only
    before prefix-only, then lexicographic.
    """
    if max_prefixes not in (0, 1) or max_suffixes not in (0, 1):
        raise ValueError("affix caps beyond one prefix and one suffix are unsupported")
    word = word.lower()
    if word.replace("-", "") == "" or not word.replace("-", "").isalpha():
        return None
    if word in lexicon.bases:
        return None

    candidates: list[Derivation] = []
    prefixes: list[Optional[Affix]] = [None]
    suffixes: list[Optional[Affix]] = [None]
    if max_prefixes:
        prefixes += sorted(lexicon.prefixes)
    if max_suffixes:
        suffixes += sorted(lexicon.suffixes)

    for pfx, sfx in itertools.product(prefixes, suffixes):
        if pfx is None and sfx is None:
            continue
        stems = {word}
        if pfx is not None:
            stems = set().union(*(strip_prefix(s, pfx) for s in stems))
        if sfx is not None:
            stems = set().union(*(strip_suffix(s, sfx) for s in stems))
        for stem in stems:
            if stem in lexicon.bases:
                candidates.append(
                    Derivation(surface=word, base=stem, bundle=AffixBundle(prefix=pfx, suffix=sfx))
                )

    if not candidates:
        return None

    shape_rank = {Shape.S: 0, Shape.P: 1, Shape.PS: 2}

    def key(d: Derivation):
        return (d.num_affixes, -len(d.base), shape_rank[d.shape], d.base, d.bundle.label)

    return min(candidates, key=key)


# --- Lexicon text serialization -------------------------------------------

_SECTIONS = ("prefixes", "suffixes", "bases", "stopwords")


def save_lexicon(lexicon: Lexicon, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for section in _SECTIONS:
            f.write(f"[{section}]\n")
            items = getattr(lexicon, section)
            forms = sorted(a.form if isinstance(a, Affix) else a for a in items)
            for form in forms:
                f.write(form + "\n")


def load_lexicon(path) -> Lexicon:
    sections: dict[str, list[str]] = {s: [] for s in _SECTIONS}
    current = None
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                if current not in sections:
                    raise ValueError(f"unknown lexicon section: {current}")
                continue
            if current is None:
                raise ValueError("lexicon entry before any section header")
            sections[current].append(line)
    return Lexicon(
        prefixes=frozenset(prefix(p) for p in sections["prefixes"]),
        suffixes=frozenset(suffix(s) for s in sections["suffixes"]),
        bases=frozenset(sections["bases"]),
        stopwords=frozenset(sections["stopwords"]),
    )


def load_affix_list(path) -> list[str]:
    """Affix candidate file: one affix per line, '#'-comments allowed."""
    out = []
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.strip()
            if line.startswith("##"):
                out.append(line[2:])
            elif line and not line.startswith("#"):
                out.append(line)
    return out
