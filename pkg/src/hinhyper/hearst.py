"""Weak supervision from lexico-syntactic hypernymy patterns.

Six patterns are recognised over lowercased token lists::

    such_as      Y such as X1, X2 and X3
    such_y_as    such Y as X1, X2
    or_other     X1, X2 or other Y
    and_other    X1, X2 and other Y
    including    Y including X1, X2
    especially   Y especially X1, X2

Y is the hypernym and each X a hyponym. Slots are anchored on the trigger
words and matched greedily against the vocabulary (longest multi-token term
first, optionally after stripping a plural ``-s``/``-es`` from the last
token). Hyponym lists continue across ``,``/``and``/``or`` and stop at the
first item that is not a vocabulary term. A match to the right of a trigger
counts only when it closes the slot, i.e. is followed by punctuation, a
joiner, a function word or the sentence end: with only "tree" in the
vocabulary, "such as tree pruning" yields nothing. Left of a trigger there
is no chunker to find the phrase start, so the longest term ending at the
trigger is taken.
"""
from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .hin import Corpus, Vocabulary

__all__ = [
    "DEFAULT_PATTERNS",
    "SeedPairSet",
    "TermMatcher",
    "extract_seed_pairs",
    "extract_from_sentence",
    "split_folds",
    "write_seeds",
    "read_seeds",
]

DEFAULT_PATTERNS = ("such_as", "such_y_as", "or_other", "and_other", "including", "especially")

_LIST_JOINERS = ("and", "or")

# A right-hand slot item must end at punctuation, a joiner, the sentence end,
# or one of these words; otherwise the slot runs on past the term.
FUNCTION_WORDS = frozenset("""
a about also among an are as at be because been being but by can could did do does etc for from had has
have in into is it its like may might must nor of on or should since so such than that the their then there
these they this those to was we were when where which while who whose will with without would
""".split())


@dataclass(frozen=True)
class SeedPairSet:
    """Sorted ``(hypernym_id, hyponym_id, count)`` triples."""

    pairs: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        seen = set()
        for hyper, hypo, count in self.pairs:
            if hyper == hypo:
                raise ValueError(f"self pair ({hyper}, {hypo})")
            if (hyper, hypo) in seen:
                raise ValueError(f"duplicate pair ({hyper}, {hypo})")
            if count < 0:
                raise ValueError("negative match count")
            seen.add((hyper, hypo))

    @classmethod
    def from_counts(cls, counts: dict[tuple[int, int], int] | Counter) -> "SeedPairSet":
        return cls(tuple((a, b, int(c)) for (a, b), c in sorted(counts.items())))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "SeedPairSet":
        return cls.from_counts(Counter(pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple[int, int, int]]:
        return iter(self.pairs)

    def __contains__(self, pair) -> bool:
        return tuple(pair[:2]) in self.pair_set

    @property
    def pair_set(self) -> frozenset[tuple[int, int]]:
        cache = self.__dict__.get("_pair_set")
        if cache is None:
            cache = frozenset((a, b) for a, b, _ in self.pairs)
            object.__setattr__(self, "_pair_set", cache)
        return cache

    def as_pairs(self) -> list[tuple[int, int]]:
        return [(a, b) for a, b, _ in self.pairs]

    def terms(self) -> set[int]:
        return {t for a, b, _ in self.pairs for t in (a, b)}


class TermMatcher:
    """Longest-match lookup of vocabulary terms inside token sequences."""

    def __init__(self, vocab: Vocabulary):
        self.index: dict[tuple[str, ...], int] = {}
        for term in vocab:
            key = tuple(term.surface.split(" "))
            self.index.setdefault(key, term.term_id)
        self.max_len = max((len(k) for k in self.index), default=0)

    def lookup(self, span: Sequence[str]) -> int | None:
        span = tuple(span)
        tid = self.index.get(span)
        if tid is not None:
            return tid
        last = span[-1]
        for cut in (2, 1):
            suffix = "es" if cut == 2 else "s"
            if last.endswith(suffix) and len(last) > cut:
                tid = self.index.get(span[:-1] + (last[:-cut],))
                if tid is not None:
                    return tid
        return None

    def forward(self, tokens: Sequence[str], start: int) -> tuple[int, int] | None:
        """Longest term starting at ``start``: ``(term_id, end)``."""
        for length in range(min(self.max_len, len(tokens) - start), 0, -1):
            tid = self.lookup(tokens[start:start + length])
            if tid is not None:
                return tid, start + length
        return None

    def backward(self, tokens: Sequence[str], end: int) -> tuple[int, int] | None:
        """Longest term ending right before ``end``: ``(term_id, start)``."""
        for length in range(min(self.max_len, end), 0, -1):
            tid = self.lookup(tokens[end - length:end])
            if tid is not None:
                return tid, end - length
        return None

    def bounded_forward(self, tokens: Sequence[str], start: int) -> tuple[int, int] | None:
        """``forward`` match that also ends the slot (no partial match)."""
        m = self.forward(tokens, start)
        if m is None or m[1] == len(tokens):
            return m
        nxt = tokens[m[1]]
        if nxt in _LIST_JOINERS or nxt in FUNCTION_WORDS or not any(ch.isalnum() for ch in nxt):
            return m
        return None

    def right_list(self, tokens: Sequence[str], pos: int) -> list[int]:
        items = []
        n = len(tokens)
        while pos < n:
            m = self.bounded_forward(tokens, pos)
            if m is None:
                break
            items.append(m[0])
            pos = m[1]
            moved = pos
            if pos < n and tokens[pos] == ",":
                pos += 1
            if pos < n and tokens[pos] in _LIST_JOINERS:
                pos += 1
            if pos == moved:
                break
        return items

    def left_list(self, tokens: Sequence[str], end: int) -> list[int]:
        items = []
        while end > 0:
            m = self.backward(tokens, end)
            if m is None:
                break
            items.append(m[0])
            end = m[1]
            moved = end
            if end > 0 and tokens[end - 1] in _LIST_JOINERS:
                end -= 1
            if end > 0 and tokens[end - 1] == ",":
                end -= 1
            if end == moved:
                break
        items.reverse()
        return items


def _hypernym_before(matcher: TermMatcher, tokens, i):
    j = i - 1 if i > 0 and tokens[i - 1] == "," else i
    m = matcher.backward(tokens, j)
    return None if m is None else m[0]


def extract_from_sentence(tokens: Sequence[str], matcher: TermMatcher,
                          patterns: Sequence[str] = DEFAULT_PATTERNS) -> list[tuple[int, int, str]]:
    """All ``(hypernym, hyponym, pattern)`` hits in one tokenized sentence."""
    tokens = [t.lower() for t in tokens]
    hits: list[tuple[int, int, str]] = []
    n = len(tokens)
    active = set(patterns)

    def emit(hyper, hypos, name):
        if hyper is None:
            return
        for hypo in hypos:
            if hypo != hyper:
                hits.append((hyper, hypo, name))

    for i, tok in enumerate(tokens):
        nxt = tokens[i + 1] if i + 1 < n else None
        if tok == "such" and nxt == "as" and "such_as" in active:
            emit(_hypernym_before(matcher, tokens, i), matcher.right_list(tokens, i + 2), "such_as")
        elif tok == "such" and nxt is not None and "such_y_as" in active:
            m = matcher.forward(tokens, i + 1)
            if m is not None and m[1] < n and tokens[m[1]] == "as":
                emit(m[0], matcher.right_list(tokens, m[1] + 1), "such_y_as")
        elif tok in ("including", "especially") and tok in active:
            emit(_hypernym_before(matcher, tokens, i), matcher.right_list(tokens, i + 1), tok)
        elif tok in _LIST_JOINERS and nxt == "other" and f"{tok}_other" in active:
            m = matcher.bounded_forward(tokens, i + 2)
            if m is not None:
                end = i - 1 if i > 0 and tokens[i - 1] == "," else i
                emit(m[0], matcher.left_list(tokens, end), f"{tok}_other")
    return hits


def extract_seed_pairs(corpus: Corpus, vocab: Vocabulary,
                       patterns: Sequence[str] | str = DEFAULT_PATTERNS) -> SeedPairSet:
    if patterns == "default":
        patterns = DEFAULT_PATTERNS
    unknown = set(patterns) - set(DEFAULT_PATTERNS)
    if unknown:
        raise ValueError(f"unknown patterns: {sorted(unknown)}")
    if len(vocab) == 0:
        raise ValueError("empty vocabulary")
    matcher = TermMatcher(vocab)
    counts: Counter = Counter()
    for sentence in corpus.sentences():
        for hyper, hypo, _ in extract_from_sentence(sentence, matcher, patterns):
            counts[hyper, hypo] += 1
    if not counts:
        warnings.warn("no pattern matches in corpus", stacklevel=2)
    return SeedPairSet.from_counts(counts)


def split_folds(seeds: SeedPairSet, k: int, seed: int) -> list[SeedPairSet]:
    """Seeded partition into ``k`` folds whose sizes differ by at most one."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(seeds) < k:
        raise ValueError(f"cannot split {len(seeds)} pairs into {k} folds")
    order = np.random.default_rng(seed).permutation(len(seeds))
    return [SeedPairSet(tuple(seeds.pairs[i] for i in sorted(chunk))) for chunk in np.array_split(order, k)]


def write_seeds(seeds: SeedPairSet, vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for hyper, hypo, count in seeds:
            fh.write(f"{vocab[hyper].surface}\t{vocab[hypo].surface}\t{count}\n")


def read_seeds(path, vocab: Vocabulary) -> SeedPairSet:
    counts: dict[tuple[int, int], int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ValueError(f"seeds line {lineno}: expected 3 fields")
            try:
                key = (vocab.id_of_surface(parts[0]), vocab.id_of_surface(parts[1]))
            except KeyError as exc:
                raise ValueError(f"seeds line {lineno}: unknown term {exc}") from None
            counts[key] = counts.get(key, 0) + int(parts[2])
    return SeedPairSet.from_counts(counts)

