"""Corpus pipeline: ingest, derivative extraction, frequency binning,
train/dev/test splitting, cloze masking, and the binary well-formedness set.

Corpora are pre-sentence-split: one sentence per line (plain text) or one
JSON record per line with a "text" field and optional "author".
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .morpho import AffixBundle, Derivation, Lexicon, Shape, analyze

MIN_WORDS = 10
MAX_WORDS = 100

# (label, inclusive lower, exclusive upper); union covers [1, 128)
FREQUENCY_BINS: tuple[tuple[str, int, int], ...] = (
    ("B1", 1, 2),
    ("B2", 2, 4),
    ("B3", 4, 8),
    ("B4", 8, 16),
    ("B5", 16, 32),
    ("B6", 32, 64),
    ("B7", 64, 128),
)

BIN_LABELS = tuple(label for label, _, _ in FREQUENCY_BINS)

DEFAULT_RATIOS = (0.6, 0.2, 0.2)
SPLIT_NAMES = ("train", "dev", "test")

MASK_TOKEN = "[MASK]"


def bin_for_frequency(f: int) -> Optional[str]:
    """Bin label for a corpus frequency, None when f is outside [1, 128)."""
    for label, lo, hi in FREQUENCY_BINS:
        if lo <= f < hi:
            return label
    return None


@dataclass(frozen=True)
class ContextSentence:
    tokens: tuple[str, ...]
    d: int  # index of the derivative

    def __post_init__(self):
        if not MIN_WORDS <= len(self.tokens) <= MAX_WORDS:
            raise ValueError(f"sentence must have {MIN_WORDS}-{MAX_WORDS} words, got {len(self.tokens)}")
        if not 0 <= self.d < len(self.tokens):
            raise ValueError("derivative index out of range")


@dataclass(frozen=True)
class OccurrenceRecord:
    sentence: ContextSentence
    derivation: Derivation


@dataclass(frozen=True)
class DatasetItem:
    item_id: str
    sentence: ContextSentence
    derivation: Derivation
    bin_label: str
    split: str
    setting: str

    def __post_init__(self):
        if self.sentence.tokens[self.sentence.d].lower() != self.derivation.surface:
            raise ValueError("derivative surface does not match the sentence token")
        if self.split not in SPLIT_NAMES:
            raise ValueError(f"unknown split {self.split!r}")
        if self.setting not in ("SHARED", "SPLIT"):
            raise ValueError(f"unknown setting {self.setting!r}")


@dataclass(frozen=True)
class WellFormednessItem:
    sentence: ContextSentence
    base: str
    bundle: AffixBundle
    label: str  # "positive" | "negative"
    source_id: str

    @property
    def item_id(self) -> str:
        return f"{self.source_id}:{self.label}"


# --- Ingestion ---------------------------------------------------------------


@dataclass
class FilterConfig:
    bot_authors: frozenset[str] = frozenset()
    language_filter: Callable[[Sequence[str]], bool] = lambda tokens: True
    min_words: int = MIN_WORDS
    max_words: int = MAX_WORDS


@dataclass
class IngestResult:
    sentences: list[tuple[str, ...]] = field(default_factory=list)
    drops: Counter = field(default_factory=Counter)
    file_errors: list[str] = field(default_factory=list)
    total_tokens: int = 0


def _token_is_clean(token: str) -> bool:
    lowered = token.lower()
    if any(ch.isdigit() for ch in token):
        return False
    if "http://" in lowered or "https://" in lowered or lowered.startswith("www."):
        return False
    if lowered.startswith(("u/", "/u/", "@")):
        return False
    return True


def _iter_records(path):
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.lstrip().startswith("{"):
                obj = json.loads(line)
                yield obj.get("text", ""), obj.get("author")
            else:
                yield line, None


def ingest(paths: Iterable, config: Optional[FilterConfig] = None) -> IngestResult:
    """Read corpus files and keep sentences passing all filters.

    Drop reasons are tallied; unreadable files are reported and skipped.
    """
    config = config or FilterConfig()
    result = IngestResult()
    for path in paths:
        try:
            records = list(_iter_records(path))
        except (OSError, json.JSONDecodeError) as exc:
            result.file_errors.append(f"{path}: {exc}")
            continue
        for text, author in records:
            tokens = tuple(text.split())
            result.total_tokens += len(tokens)
            if author is not None and author in config.bot_authors:
                result.drops["bot_author"] += 1
                continue
            if not config.min_words <= len(tokens) <= config.max_words:
                result.drops["length"] += 1
                continue
            if not all(_token_is_clean(t) for t in tokens):
                result.drops["dirty_token"] += 1
                continue
            if not config.language_filter(tokens):
                result.drops["language"] += 1
                continue
            result.sentences.append(tokens)
    return result


# --- Extraction --------------------------------------------------------------


def extract(
    sentences: Iterable[Sequence[str]],
    lexicon: Lexicon,
    max_prefixes: int = 1,
    max_suffixes: int = 1,
) -> list[OccurrenceRecord]:
    """One record per (sentence, derivative); a derivative occurring more
    than once in a sentence drops the whole sentence."""
    cache: dict[str, Optional[Derivation]] = {}
    records: list[OccurrenceRecord] = []
    for raw_tokens in sentences:
        tokens = tuple(raw_tokens)
        lowered = [t.lower() for t in tokens]
        found: list[tuple[int, Derivation]] = []
        for i, word in enumerate(lowered):
            if word not in cache:
                cache[word] = analyze(word, lexicon, max_prefixes, max_suffixes)
            derivation = cache[word]
            if derivation is not None:
                found.append((i, derivation))
        if not found:
            continue
        counts = Counter(lowered[i] for i, _ in found)
        if any(c > 1 for c in counts.values()):
            continue  # duplicated derivative: drop the sentence
        for i, derivation in found:
            records.append(OccurrenceRecord(ContextSentence(tokens, i), derivation))
    return records


# --- Binning -----------------------------------------------------------------


@dataclass(frozen=True)
class BinStats:
    """Per-bin summary: mean frequency per billion words, and per shape
    the number of distinct derivatives and context sentences."""

    mu_f: dict[str, float]
    n_d: dict[tuple[str, str], int]  # (bin, shape) -> distinct derivatives
    n_s: dict[tuple[str, str], int]  # (bin, shape) -> context sentences

    def tsv(self) -> str:
        header = ["bin", "mu_f"]
        for shape in ("P", "S", "PS"):
            header += [f"n_d_{shape}", f"n_s_{shape}"]
        lines = ["\t".join(header)]
        for label in BIN_LABELS:
            row = [label, f"{self.mu_f.get(label, 0.0):.3f}"]
            for shape in ("P", "S", "PS"):
                row.append(str(self.n_d.get((label, shape), 0)))
                row.append(str(self.n_s.get((label, shape), 0)))
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"


def bin_records(
    records: Sequence[OccurrenceRecord],
    total_corpus_tokens: int,
) -> tuple[dict[str, str], BinStats]:
    """Assign each derivative type to a frequency bin; f >= 128 is excluded.

    Frequency is the number of context sentences a derivative occurs in.
    """
    freq = Counter(r.derivation.surface for r in records)
    bin_by_surface: dict[str, str] = {}
    for surface, f in freq.items():
        label = bin_for_frequency(f)
        if label is not None:
            bin_by_surface[surface] = label

    shape_by_surface = {r.derivation.surface: r.derivation.shape.value for r in records}
    n_d: dict[tuple[str, str], int] = defaultdict(int)
    n_s: dict[tuple[str, str], int] = defaultdict(int)
    per_bin_freqs: dict[str, list[int]] = defaultdict(list)
    for surface, label in bin_by_surface.items():
        shape = shape_by_surface[surface]
        n_d[(label, shape)] += 1
        n_s[(label, shape)] += freq[surface]
        per_bin_freqs[label].append(freq[surface])

    scale = 1e9 / total_corpus_tokens if total_corpus_tokens else 0.0
    mu_f = {
        label: scale * sum(fs) / len(fs)
        for label, fs in per_bin_freqs.items()
    }
    return bin_by_surface, BinStats(mu_f=mu_f, n_d=dict(n_d), n_s=dict(n_s))


# --- Splitting ---------------------------------------------------------------


def item_id(sentence: ContextSentence, surface: str) -> str:
    payload = json.dumps([list(sentence.tokens), sentence.d, surface])
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:16]


def _cut_points(n: int, ratios: Sequence[float]) -> tuple[int, int]:
    a = round(n * ratios[0])
    b = round(n * (ratios[0] + ratios[1]))
    return a, b


def split_records(
    records: Sequence[OccurrenceRecord],
    bin_by_surface: dict[str, str],
    setting: str,
    seed: int,
    ratios: Sequence[float] = DEFAULT_RATIOS,
) -> list[DatasetItem]:
    """Assign train/dev/test independently per frequency bin.

    SHARED splits items uniformly at random; SPLIT partitions bases into
    disjoint sets and items follow their base (greedy balancing: bases in
    descending item count go to the split furthest below its target).
    """
    if setting not in ("SHARED", "SPLIT"):
        raise ValueError(f"unknown setting {setting!r}")
    if abs(sum(ratios) - 1.0) > 1e-9 or len(ratios) != 3:
        raise ValueError("ratios must be three numbers summing to 1")

    by_bin: dict[str, list[OccurrenceRecord]] = defaultdict(list)
    for r in records:
        label = bin_by_surface.get(r.derivation.surface)
        if label is not None:
            by_bin[label].append(r)

    rng = random.Random(seed)
    items: list[DatasetItem] = []
    for label in BIN_LABELS:
        bin_records_ = by_bin.get(label)
        if not bin_records_:
            continue
        assignment: dict[int, str] = {}
        if setting == "SHARED":
            order = list(range(len(bin_records_)))
            rng.shuffle(order)
            a, b = _cut_points(len(order), ratios)
            for pos, idx in enumerate(order):
                assignment[idx] = SPLIT_NAMES[0 if pos < a else (1 if pos < b else 2)]
        else:
            by_base: dict[str, list[int]] = defaultdict(list)
            for idx, r in enumerate(bin_records_):
                by_base[r.derivation.base].append(idx)
            if len(by_base) < 3:
                raise ValueError(
                    f"bin {label}: SPLIT needs at least 3 distinct bases, found {len(by_base)}"
                )
            bases = sorted(by_base, key=lambda b: (-len(by_base[b]), b))
            rng.shuffle(bases)
            bases.sort(key=lambda b: -len(by_base[b]))  # stable: ties stay shuffled
            total = len(bin_records_)
            assigned = [0.0, 0.0, 0.0]
            for base in bases:
                deficits = [ratios[i] * total - assigned[i] for i in range(3)]
                target = max(range(3), key=lambda i: (deficits[i], -i))
                assigned[target] += len(by_base[base])
                for idx in by_base[base]:
                    assignment[idx] = SPLIT_NAMES[target]
        for idx, r in enumerate(bin_records_):
            items.append(
                DatasetItem(
                    item_id=item_id(r.sentence, r.derivation.surface),
                    sentence=r.sentence,
                    derivation=r.derivation,
                    bin_label=label,
                    split=assignment[idx],
                    setting=setting,
                )
            )
    return items


def achieved_ratios(items: Sequence[DatasetItem]) -> dict[str, float]:
    counts = Counter(i.split for i in items)
    total = len(items) or 1
    return {name: counts.get(name, 0) / total for name in SPLIT_NAMES}


# --- Masking -----------------------------------------------------------------


@dataclass(frozen=True)
class MaskedItem:
    item_id: str
    tokens: tuple[str, ...]
    mask_positions: tuple[int, ...]
    base: str
    gold_label: str
    mode: str  # "word" | "affix"


def mask(item: DatasetItem, mode: str = "word", segmenter=None) -> MaskedItem:
    """Cloze form of an item.

    Whole-word mode replaces the derivative token with [MASK].  Affix mode
    needs a `segmenter` callable (derivation -> TokenSeq with maskable
    affix positions); only the affix slots are masked.
    """
    sentence = item.sentence
    if sentence.tokens[sentence.d].lower() != item.derivation.surface:
        raise ValueError("item sentence does not contain the derivative at index d")
    if mode == "word":
        tokens = list(sentence.tokens)
        tokens[sentence.d] = MASK_TOKEN
        return MaskedItem(
            item_id=item.item_id,
            tokens=tuple(tokens),
            mask_positions=(sentence.d,),
            base=item.derivation.base,
            gold_label=item.derivation.bundle.label,
            mode="word",
        )
    if mode == "affix":
        if segmenter is None:
            raise ValueError("affix mode requires a segmenter")
        seq = segmenter(item.derivation)
        left = list(sentence.tokens[: sentence.d])
        derivative_tokens = [
            MASK_TOKEN if i in seq.maskable else t for i, t in enumerate(seq.tokens)
        ]
        right = list(sentence.tokens[sentence.d + 1:])
        tokens = left + derivative_tokens + right
        positions = tuple(sentence.d + i for i in seq.maskable)
        return MaskedItem(
            item_id=item.item_id,
            tokens=tuple(tokens),
            mask_positions=positions,
            base=item.derivation.base,
            gold_label=item.derivation.bundle.label,
            mode="affix",
        )
    raise ValueError(f"unknown mask mode {mode!r}")


def unmask(masked: MaskedItem, item: DatasetItem) -> tuple[str, ...]:
    """Reconstruct the original sentence tokens from a word-mode masking."""
    if masked.mode != "word":
        raise ValueError("unmask applies to word-mode maskings")
    tokens = list(masked.tokens)
    (pos,) = masked.mask_positions
    tokens[pos] = item.sentence.tokens[item.sentence.d]
    return tuple(tokens)


# --- Well-formedness dataset ---------------------------------------------------


def build_wellformedness(
    items: Sequence[DatasetItem],
    lexicon: Lexicon,
    seed: int,
) -> list[WellFormednessItem]:
    """Positive/negative pairs for prefix-shape items; the negative swaps in
    a random different prefix, context unchanged."""
    prefixes = sorted(lexicon.prefix_forms)
    if len(prefixes) < 2:
        raise ValueError("well-formedness sampling needs at least 2 prefixes")
    rng = random.Random(seed)
    out: list[WellFormednessItem] = []
    for item in items:
        if item.derivation.shape is not Shape.P:
            continue
        attested = item.derivation.bundle.prefix.form
        out.append(
            WellFormednessItem(
                sentence=item.sentence,
                base=item.derivation.base,
                bundle=item.derivation.bundle,
                label="positive",
                source_id=item.item_id,
            )
        )
        alternatives = [p for p in prefixes if p != attested]
        negative = rng.choice(alternatives)
        out.append(
            WellFormednessItem(
                sentence=item.sentence,
                base=item.derivation.base,
                bundle=AffixBundle.from_label(negative),
                label="negative",
                source_id=item.item_id,
            )
        )
    return out


# --- JSONL I/O -----------------------------------------------------------------


def item_to_obj(item: DatasetItem) -> dict:
    b = item.derivation.bundle
    return {
        "id": item.item_id,
        "tokens": list(item.sentence.tokens),
        "d": item.sentence.d,
        "base": item.derivation.base,
        "prefix": b.prefix.form if b.prefix else None,
        "suffix": b.suffix.form if b.suffix else None,
        "shape": item.derivation.shape.value,
        "bin": item.bin_label,
        "split": item.split,
        "setting": item.setting,
    }


def item_from_obj(obj: dict) -> DatasetItem:
    sentence = ContextSentence(tuple(obj["tokens"]), obj["d"])
    bundle = AffixBundle(
        prefix=AffixBundle.from_label(obj["prefix"]).prefix if obj.get("prefix") else None,
        suffix=AffixBundle.from_label("##" + obj["suffix"]).suffix if obj.get("suffix") else None,
    )
    derivation = Derivation(
        surface=sentence.tokens[sentence.d].lower(),
        base=obj["base"],
        bundle=bundle,
    )
    return DatasetItem(
        item_id=obj["id"],
        sentence=sentence,
        derivation=derivation,
        bin_label=obj["bin"],
        split=obj["split"],
        setting=obj["setting"],
    )


def write_items(items: Iterable[DatasetItem], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for item in items:
            f.write(json.dumps(item_to_obj(item)) + "\n")


def read_items(path) -> list[DatasetItem]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(item_from_obj(json.loads(line)))
    return out


def write_wellformedness(items: Iterable[WellFormednessItem], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for w in items:
            b = w.bundle
            f.write(
                json.dumps(
                    {
                        "id": w.item_id,
                        "tokens": list(w.sentence.tokens),
                        "d": w.sentence.d,
                        "base": w.base,
                        "prefix": b.prefix.form if b.prefix else None,
                        "suffix": b.suffix.form if b.suffix else None,
                        "shape": b.shape.value,
                        "label": w.label,
                    }
                )
                + "\n"
            )


def read_wellformedness(path) -> list[WellFormednessItem]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            bundle = AffixBundle(
                prefix=AffixBundle.from_label(obj["prefix"]).prefix if obj.get("prefix") else None,
                suffix=AffixBundle.from_label("##" + obj["suffix"]).suffix if obj.get("suffix") else None,
            )
            source_id, _, label = obj["id"].rpartition(":")
            out.append(
                WellFormednessItem(
                    sentence=ContextSentence(tuple(obj["tokens"]), obj["d"]),
                    base=obj["base"],
                    bundle=bundle,
                    label=obj["label"],
                    source_id=source_id,
                )
            )
    return out
