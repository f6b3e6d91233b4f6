"""Chinese n-gram lexicon and lattice matching.

The lexicon is built by frequency thresholding over training questions
(character n-grams of length 2..max_n, skipping any n-gram that contains
ASCII or whitespace). Matching a question against the lexicon yields a
lattice: the character sequence plus every lexicon n-gram span covering it,
overlaps included. Characters are Unicode code points throughout.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

__all__ = ["Lexicon", "NGramLattice", "build_lexicon", "match_ngrams",
           "save_lexicon", "load_lexicon"]


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, int]  # n-gram -> dense 0-based id
    freqs: dict[str, int]
    max_n: int
    min_freq: int

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class NGramLattice:
    chars: tuple[str, ...]
    matches: tuple[tuple[int, int, int], ...]  # (start, len, ngram_id), sorted


def _droppable(ngram: str) -> bool:
    return any(ord(ch) < 128 or ch.isspace() for ch in ngram)


def build_lexicon(questions: list[str], max_n: int = 4, min_freq: int = 5,
                  max_size: int | None = None) -> Lexicon:
    """Count all character n-grams of length 2..max_n and keep those with
    frequency >= min_freq; ids go by descending frequency, ties broken
    lexicographically. max_size optionally caps the lexicon."""
    if max_n < 2:
        raise ValueError("max_n must be >= 2")
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts: Counter[str] = Counter()
    for question in questions:
        chars = list(question)
        for n in range(2, max_n + 1):
            for i in range(len(chars) - n + 1):
                gram = "".join(chars[i:i + n])
                if not _droppable(gram):
                    counts[gram] += 1
    kept = sorted(
        ((g, f) for g, f in counts.items() if f >= min_freq),
        key=lambda item: (-item[1], item[0]))
    if max_size is not None:
        kept = kept[:max_size]
    return Lexicon(
        entries={g: i for i, (g, _) in enumerate(kept)},
        freqs=dict(kept), max_n=max_n, min_freq=min_freq)


def match_ngrams(question: str, lex: Lexicon) -> NGramLattice:
    """Every window of the question whose substring is a lexicon entry
    becomes one match; overlapping matches are all retained."""
    chars = tuple(question)
    matches = []
    for start in range(len(chars)):
        for n in range(2, min(lex.max_n, len(chars) - start) + 1):
            gram = "".join(chars[start:start + n])
            gid = lex.entries.get(gram)
            if gid is not None:
                matches.append((start, n, gid))
    matches.sort(key=lambda m: (m[0], m[1]))
    return NGramLattice(chars, tuple(matches))


def save_lexicon(lex: Lexicon, path: str | Path) -> None:
    """Persist as "ngram<TAB>id<TAB>freq" lines sorted by id."""
    lines = sorted(lex.entries.items(), key=lambda kv: kv[1])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#maxn\t{lex.max_n}\t{lex.min_freq}\n")
        for gram, gid in lines:
            fh.write(f"{gram}\t{gid}\t{lex.freqs[gram]}\n")


def load_lexicon(path: str | Path) -> Lexicon:
    entries: dict[str, int] = {}
    freqs: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        max_n, min_freq = int(header[1]), int(header[2])
        for line in fh:
            gram, gid, freq = line.rstrip("\n").split("\t")
            entries[gram] = int(gid)
            freqs[gram] = int(freq)
    return Lexicon(entries=entries, freqs=freqs, max_n=max_n, min_freq=min_freq)
