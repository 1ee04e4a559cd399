"""Encoding phrases, sentences and structure trees into single hypervectors."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .binding import BindingOperator, bind
from .core import Codebook, tag_symbol
from .errors import DimensionMismatch, InvalidArgument, InvalidRoles, ParseError

SEQUENCE_ROLE = "M"
SCHEMES = ("sequential", "roles", "multi")
MULTI_PARTS = ("surface", "sequential", "roles")

_COUNT_TAG = re.compile(r"^phraseHas(\d+)words?$")


def count_tag(k: int) -> str:
    return "phraseHas1word" if k == 1 else f"phraseHas{k}words"


@dataclass(frozen=True)
class Phrase:
    words: tuple[str, ...]
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "tags", tuple(t.lstrip("@") for t in self.tags))
        if not self.words:
            raise InvalidArgument("a phrase needs at least one word")
        for t in self.tags:
            m = _COUNT_TAG.match(t)
            if m and int(m.group(1)) != len(self.words):
                raise InvalidArgument(f"tag {t!r} on a phrase of {len(self.words)} words")

    def with_count_tag(self) -> "Phrase":
        if any(_COUNT_TAG.match(t) for t in self.tags):
            return self
        return Phrase(self.words, self.tags + (count_tag(len(self.words)),))


@dataclass(frozen=True)
class SentenceSpec:
    phrases: tuple[Phrase, ...]
    scheme: str = "sequential"
    weights: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "phrases", tuple(self.phrases))
        if not self.phrases:
            raise InvalidArgument("a sentence needs at least one phrase")
        if self.scheme not in SCHEMES:
            raise InvalidArgument(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        for part, w in self.weights.items():
            if part not in MULTI_PARTS:
                raise InvalidArgument(f"unknown multi-representation part {part!r}")
            if not np.isfinite(w):
                raise InvalidArgument("weights must be finite")


# -- structure expressions -------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    symbol: str


@dataclass(frozen=True)
class Sum:
    terms: tuple[tuple[float, "StructureExpr"], ...]


@dataclass(frozen=True)
class Bind:
    role: str
    child: "StructureExpr"


StructureExpr = Union[Leaf, Sum, Bind]


def plus(*children, weights: Sequence[float] | None = None) -> Sum:
    """Sum node; bare strings become leaves."""
    children = [Leaf(c) if isinstance(c, str) else c for c in children]
    weights = [1.0] * len(children) if weights is None else list(weights)
    if len(weights) != len(children):
        raise InvalidArgument("one weight per term")
    return Sum(tuple(zip(map(float, weights), children)))


def bound(role: str, child) -> Bind:
    return Bind(role, Leaf(child) if isinstance(child, str) else child)


# -- encoding ------------------------------------------------------------


def encode_phrase(codebook: Codebook, phrase: Phrase, skip_tags: Sequence[str] = ()) -> np.ndarray:
    """Bundle of the phrase's word and tag vectors (order-independent)."""
    symbols = list(phrase.words) + [tag_symbol(t) for t in phrase.tags if t not in skip_tags]
    return np.sum([codebook.vector(s) for s in symbols], axis=0)


def step_state(op: BindingOperator, state, inputs: Sequence = ()) -> np.ndarray:
    """One recurrent update: ``bind(op, state) + sum(inputs)``.

    ``state`` and the inputs may be stacks of row vectors of equal shape.
    """
    out = bind(op, np.asarray(state, dtype=np.float64))
    for x in inputs:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != out.shape:
            raise DimensionMismatch(out.shape[-1], x.shape[-1])
        out = out + x
    return out


def role_of(phrase: Phrase, bindings: Mapping[str, BindingOperator]) -> str:
    for t in phrase.tags:
        if t in bindings:
            return t
    raise InvalidRoles(f"phrase {' '.join(phrase.words)!r} has no tag naming a binding role")


def _rescale(v: np.ndarray, d: int) -> np.ndarray:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(n > 0, v * (np.sqrt(d) / np.where(n > 0, n, 1.0)), 0.0)


def _sequence_op(bindings):
    try:
        return bindings[SEQUENCE_ROLE]
    except KeyError:
        raise InvalidRoles(f"sequential encoding needs a binding operator named {SEQUENCE_ROLE!r}") from None


def _sequential(codebook, bindings, specs, normalize_phrases):
    op = _sequence_op(bindings)
    d = codebook.dimension
    longest = max(len(s.phrases) for s in specs)
    state = np.zeros((len(specs), d))
    # sentences are right-aligned so the last phrase of each lands at level 0;
    # the zero rows in front stay zero under binding
    for step in range(longest):
        inputs = np.zeros((len(specs), d))
        for row, spec in enumerate(specs):
            k = step - (longest - len(spec.phrases))
            if k >= 0:
                inputs[row] = encode_phrase(codebook, spec.phrases[k])
        if normalize_phrases:
            inputs = _rescale(inputs, d)
        state = step_state(op, state, [inputs]) if step else inputs
    return state


def _roles(codebook, bindings, specs, normalize_phrases):
    d = codebook.dimension
    out = np.zeros((len(specs), d))
    groups: dict[str, list] = {}
    for row, spec in enumerate(specs):
        for phrase in spec.phrases:
            role = role_of(phrase, bindings)
            groups.setdefault(role, []).append((row, encode_phrase(codebook, phrase, skip_tags=(role,))))
    for role in sorted(groups):
        rows = [r for r, _ in groups[role]]
        bundles = np.stack([b for _, b in groups[role]])
        if normalize_phrases:
            bundles = _rescale(bundles, d)
        np.add.at(out, rows, bind(bindings[role], bundles))
    return out


def _surface(codebook, specs):
    return np.stack([np.sum([codebook.vector(w) for p in s.phrases for w in p.words], axis=0) for s in specs])


def encode_sentences(
    codebook: Codebook,
    bindings: Mapping[str, BindingOperator],
    specs: Sequence[SentenceSpec],
    normalize_phrases: bool = False,
) -> np.ndarray:
    """Encode many sentences at once; row i is the encoding of ``specs[i]``.

    Binding is applied to whole batches, so this is much faster than
    encoding one sentence at a time when D is large.
    """
    if not specs:
        return np.zeros((0, codebook.dimension))
    out = np.zeros((len(specs), codebook.dimension))
    by_scheme: dict[str, list[int]] = {}
    for i, s in enumerate(specs):
        by_scheme.setdefault(s.scheme, []).append(i)
    for scheme, idx in by_scheme.items():
        chunk = [specs[i] for i in idx]
        if scheme == "sequential":
            out[idx] = _sequential(codebook, bindings, chunk, normalize_phrases)
        elif scheme == "roles":
            out[idx] = _roles(codebook, bindings, chunk, normalize_phrases)
        else:
            acc = np.zeros((len(chunk), codebook.dimension))
            for row, spec in enumerate(chunk):
                weights = dict(spec.weights) or {p: 1.0 for p in MULTI_PARTS}
                for part in MULTI_PARTS:
                    w = weights.get(part, 0.0)
                    if w == 0.0:
                        continue
                    if part == "surface":
                        acc[row] += w * _surface(codebook, [spec])[0]
                    elif part == "sequential":
                        acc[row] += w * _sequential(codebook, bindings, [spec], normalize_phrases)[0]
                    else:
                        acc[row] += w * _roles(codebook, bindings, [spec], normalize_phrases)[0]
            out[idx] = acc
    return out


def encode_sentence(codebook, bindings, spec: SentenceSpec, normalize_phrases: bool = False) -> np.ndarray:
    """Encode one sentence.

    ``sequential`` folds the phrases through ``step_state`` with operator
    ``"M"``, so phrase k of n ends up under ``(M)^(n-k)`` and keeps its role
    tag inside the bundle.  ``roles`` binds each phrase with the operator
    named by its role tag and leaves that tag out of the bundle.  ``multi``
    adds weighted ``surface`` (bag of words), ``sequential`` and ``roles``
    encodings.
    """
    return encode_sentences(codebook, bindings, [spec], normalize_phrases)[0]


def encode_expr(codebook: Codebook, bindings: Mapping[str, BindingOperator], expr: StructureExpr) -> np.ndarray:
    if isinstance(expr, Leaf):
        return np.array(codebook.vector(expr.symbol))
    if isinstance(expr, Sum):
        if not expr.terms:
            raise InvalidArgument("empty sum")
        parts = []
        for w, child in expr.terms:
            if not np.isfinite(w):
                raise InvalidArgument("weights must be finite")
            parts.append(w * encode_expr(codebook, bindings, child))
        return np.sum(parts, axis=0)
    if isinstance(expr, Bind):
        if expr.role not in bindings:
            raise InvalidRoles(f"no binding operator for role {expr.role!r}")
        return bind(bindings[expr.role], encode_expr(codebook, bindings, expr.child))
    raise InvalidArgument(f"not a structure expression: {expr!r}")


# -- sentence text grammar -------------------------------------------------


def parse_sentence_spec(text: str, scheme: str = "sequential", auto_count_tags: bool = True) -> SentenceSpec:
    """Parse ``"@actor the smart girl | @verb saw | ..."``.

    Phrases are separated by ``|``, tokens by whitespace, tags start with
    ``@`` and ``#`` starts a comment running to the end of the line.
    """
    phrases = []
    words, tags = [], []
    phrase_start = 0
    pos = 0
    n = len(text)

    def close():
        if not words:
            raise ParseError("phrase has tags but no words" if tags else "empty phrase", phrase_start)
        try:
            p = Phrase(tuple(words), tuple(tags))
        except InvalidArgument as exc:
            raise ParseError(str(exc), phrase_start) from None
        phrases.append(p.with_count_tag() if auto_count_tags else p)

    while pos < n:
        ch = text[pos]
        if ch == "#":
            while pos < n and text[pos] != "\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        elif ch == "|":
            close()
            words, tags = [], []
            pos += 1
            phrase_start = pos
        else:
            start = pos
            while pos < n and not text[pos].isspace() and text[pos] not in "|#":
                pos += 1
            token = text[start:pos]
            if token.startswith("@"):
                if len(token) == 1:
                    raise ParseError("empty tag", start)
                tags.append(token[1:])
            else:
                words.append(token)
    if not phrases and not words and not tags:
        raise ParseError("no phrases", 0)
    close()
    try:
        return SentenceSpec(tuple(phrases), scheme)
    except InvalidArgument as exc:
        raise ParseError(str(exc), 0) from None
