"""Recognition and decoding against encoded structures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .binding import BindingOperator, bind_power
from .core import Codebook, as_vector, is_tag, tag_symbol
from .errors import InvalidArgument
from .structure import count_tag


@dataclass(frozen=True)
class ProbeResult:
    symbol: str
    score: float
    level: int | None = None
    decision: bool | None = None


def multilevel_probe(op: BindingOperator, candidate, max_depth: int) -> np.ndarray:
    """``[(M)^0 + ... + (M)^max_depth] candidate`` with raw (unnormalized) powers."""
    if max_depth < 0:
        raise InvalidArgument("max_depth must be >= 0")
    raw = op.with_normalization("none")
    term = np.array(as_vector(candidate))
    out = term.copy()
    for _ in range(max_depth):
        term = raw.product(term)
        out += term
    return out


def cooccur_score(op: BindingOperator, v, a, b, max_depth: int) -> tuple[float, int]:
    """Max over levels i of ``(M)^i (a + b) . v`` and the level attaining it.

    Ties go to the smallest level.
    """
    if max_depth < 0:
        raise InvalidArgument("max_depth must be >= 0")
    v = as_vector(v)
    pair = as_vector(a) + as_vector(b)
    best, level = -np.inf, 0
    for i in range(max_depth + 1):
        s = float(bind_power(op, pair, i) @ v)
        if s > best:
            best, level = s, i
    return best, level


def scores(codebook: Codebook, v, symbols: Sequence[str] | None = None) -> np.ndarray:
    return codebook.matrix(symbols) @ as_vector(v)


def cleanup(codebook: Codebook, v) -> ProbeResult:
    """Nearest codebook symbol by dot product; ties go to the earlier symbol."""
    if len(codebook) == 0:
        raise InvalidArgument("cleanup against an empty codebook")
    s = scores(codebook, v)
    i = int(np.argmax(s))
    return ProbeResult(codebook.symbols[i], float(s[i]))


def top_k(codebook: Codebook, v, k: int) -> list[ProbeResult]:
    s = scores(codebook, v)
    order = np.argsort(-s, kind="stable")[:k]
    return [ProbeResult(codebook.symbols[i], float(s[i])) for i in order]


def decode_phrase(codebook: Codebook, op: BindingOperator, v, level: int, word_count: int) -> list[str]:
    """The ``word_count`` words whose level-``level`` images best match ``v``.

    Tag symbols (``@``-prefixed) are never returned.  Result order is score
    descending, then symbol ascending.
    """
    if word_count < 1:
        raise InvalidArgument("word_count must be >= 1")
    words = [s for s in codebook.symbols if not is_tag(s)]
    if word_count > len(words):
        raise InvalidArgument(f"asked for {word_count} words from a vocabulary of {len(words)}")
    images = bind_power(op, codebook.matrix(words), level)
    s = images @ as_vector(v)
    ranked = sorted(zip(words, s), key=lambda t: (-t[1], t[0]))
    return [w for w, _ in ranked[:word_count]]


def word_count_scores(codebook: Codebook, op: BindingOperator, v, level: int, max_k: int) -> np.ndarray:
    if max_k < 1:
        raise InvalidArgument("max_k must be >= 1")
    tags = np.stack([codebook.vector(tag_symbol(count_tag(k))) for k in range(1, max_k + 1)])
    return bind_power(op, tags, level) @ as_vector(v)


def read_word_count(codebook: Codebook, op: BindingOperator, v, level: int, max_k: int) -> int:
    """Phrase length at ``level`` read from its ``phraseHasKwords`` tag.

    When ``v`` carries no count tag at that level the answer is arbitrary;
    callers should treat a best score below the member threshold (see
    ``word_count_scores``) as "no tag found".
    """
    return int(np.argmax(word_count_scores(codebook, op, v, level, max_k))) + 1


def format_report(results: Iterable[ProbeResult]) -> str:
    """Tab-separated ``symbol score level decision`` lines, 6 significant digits."""
    lines = []
    for r in results:
        level = "-" if r.level is None else str(r.level)
        decision = "-" if r.decision is None else ("true" if r.decision else "false")
        lines.append(f"{r.symbol}\t{r.score:.6g}\t{level}\t{decision}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_report(text: str) -> list[ProbeResult]:
    out = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        symbol, score, level, decision = line.split("\t")
        out.append(
            ProbeResult(
                symbol,
                float(score),
                None if level == "-" else int(level),
                None if decision == "-" else decision == "true",
            )
        )
    return out


def level_scores(op: BindingOperator, candidate, v, max_depth: int) -> list[ProbeResult]:
    """Membership of ``candidate`` at each level 0..max_depth of ``v``.

    The score at level i is the least-squares coefficient of
    ``bind_power(op, candidate, i)`` in ``v``, multiplied by D so that a
    unit-weight member scores about D and the D/2 rule applies.  The
    coefficient is 1 for members only under linear normalizations
    (``none``, ``unit``).
    """
    v = as_vector(v)
    d = v.size
    out = []
    term = np.array(as_vector(candidate))
    for i in range(max_depth + 1):
        if i:
            term = bind_power(op, term, 1)
        nn = float(term @ term)
        s = d * float(term @ v) / nn if nn else 0.0
        out.append(ProbeResult("", s, i, s >= d / 2))
    return out
