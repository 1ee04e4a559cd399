"""Learnability demo: sentences that contain one of two key words.

Sentences are folded with operator ``"M"`` as in ``structure``; a linear
discriminant exists in closed form (the multilevel probe of
``V_pos - V_neg``), so perceptron training is guaranteed to converge up to
finite-D noise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .binding import BindingOperator, bind_power
from .core import Codebook
from .errors import DimensionMismatch, InvalidArgument
from .structure import SEQUENCE_ROLE, Phrase, SentenceSpec, encode_sentences

MAX_PHRASE_WORDS = 5


@dataclass(frozen=True)
class LabeledExample:
    vector: np.ndarray
    label: int


@dataclass
class LinearModel:
    weights: np.ndarray
    mistakes: int = 0
    epochs: int = 0
    converged: bool = False


def _arrays(data: Sequence[LabeledExample]):
    if not data:
        raise InvalidArgument("empty dataset")
    dims = {ex.vector.shape[-1] for ex in data}
    if len(dims) != 1:
        a, b = sorted(dims)[:2]
        raise DimensionMismatch(a, b)
    return np.stack([ex.vector for ex in data]), np.array([ex.label for ex in data], dtype=np.int64)


def corpus_sentences(vocab, pos_word, neg_word, count, max_phrases=4, seed=0):
    """Sentence specs and labels for ``generate_corpus`` (no encoding)."""
    if pos_word not in vocab or neg_word not in vocab or pos_word == neg_word:
        raise InvalidArgument("pos_word and neg_word must be distinct members of vocab")
    if not 1 <= max_phrases <= 4:
        raise InvalidArgument("max_phrases must be between 1 and 4")
    fillers = [w for w in dict.fromkeys(vocab) if w not in (pos_word, neg_word)]
    if len(fillers) < MAX_PHRASE_WORDS:
        raise InvalidArgument(f"vocabulary needs at least {MAX_PHRASE_WORDS} words besides the two keys")
    g = rng.generator(seed, "corpus")
    specs, labels = [], []
    for _ in range(count):
        n_phrases = int(g.integers(1, max_phrases + 1))
        phrases = [list(g.choice(fillers, size=int(g.integers(1, MAX_PHRASE_WORDS + 1)), replace=False)) for _ in range(n_phrases)]
        label = 1 if g.random() < 0.5 else -1
        target = phrases[int(g.integers(n_phrases))]
        target.insert(int(g.integers(len(target) + 1)), pos_word if label == 1 else neg_word)
        specs.append(SentenceSpec(tuple(Phrase(tuple(map(str, p))).with_count_tag() for p in phrases)))
        labels.append(label)
    return specs, labels


def generate_corpus(
    codebook: Codebook,
    op: BindingOperator,
    count: int,
    vocab: Sequence[str],
    pos_word: str,
    neg_word: str,
    max_phrases: int = 4,
    seed: int = 0,
) -> list[LabeledExample]:
    """Random sentences of 1..max_phrases phrases, each of 1..5 filler words.

    Exactly one key word is inserted into a random phrase; the label is +1
    when it is ``pos_word``.
    """
    specs, labels = corpus_sentences(vocab, pos_word, neg_word, count, max_phrases, seed)
    vectors = encode_sentences(codebook, {SEQUENCE_ROLE: op}, specs)
    return [LabeledExample(v, y) for v, y in zip(vectors, labels)]


def analytic_discriminant(codebook: Codebook, op: BindingOperator, pos_word: str, neg_word: str, max_depth: int = 3) -> np.ndarray:
    """``sum_i bind_power(op, V_pos - V_neg, i)`` for i = 0..max_depth.

    Powers follow the operator's own normalization so each level matches
    the scale at which the corpus was encoded.
    """
    diff = codebook.vector(pos_word) - codebook.vector(neg_word)
    return np.sum([bind_power(op, diff, i) for i in range(max_depth + 1)], axis=0)


def predict(weights, x) -> np.ndarray:
    # zero scores classify as +1
    return np.where(np.asarray(x) @ weights >= 0, 1, -1)


def perceptron_train(data: Sequence[LabeledExample], max_epochs: int = 100) -> LinearModel:
    X, y = _arrays(data)
    w = np.zeros(X.shape[1])
    model = LinearModel(w)
    for epoch in range(max_epochs):
        errors = 0
        for xi, yi in zip(X, y):
            if yi * (w @ xi) <= 0:
                w += yi * xi
                errors += 1
        model.mistakes += errors
        model.epochs = epoch + 1
        if errors == 0:
            model.converged = True
            break
    return model


def evaluate(model_or_weights, data: Sequence[LabeledExample]) -> float:
    w = model_or_weights.weights if isinstance(model_or_weights, LinearModel) else np.asarray(model_or_weights)
    X, y = _arrays(data)
    if X.shape[1] != w.shape[0]:
        raise DimensionMismatch(w.shape[0], X.shape[1])
    return float(np.mean(predict(w, X) == y))


def margin(weights, data: Sequence[LabeledExample]) -> float:
    """Smallest ``label * (w . x) / |w|``; positive iff ``w`` separates the data."""
    X, y = _arrays(data)
    w = np.asarray(weights, dtype=np.float64)
    return float(np.min(y * (X @ w)) / np.linalg.norm(w))


def radius(data: Sequence[LabeledExample]) -> float:
    X, _ = _arrays(data)
    return float(np.max(np.linalg.norm(X, axis=1)))


def mistake_bound(data: Sequence[LabeledExample], separator) -> float:
    """Novikoff bound ``(R / gamma)^2`` for a separating vector; inf if it does not separate."""
    g = margin(separator, data)
    return (radius(data) / g) ** 2 if g > 0 else float("inf")


@dataclass(frozen=True)
class TrainingReport:
    mistakes: int
    epochs: int
    converged: bool
    trainAcc: float
    testAcc: float
    oracleAcc: float
    margin: float
    mistakeBound: float
    boundSource: str

    def to_text(self) -> str:
        lines = []
        for k, v in self.__dict__.items():
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k}={v}")
        return "\n".join(lines) + "\n"


def run_demo(codebook, op, vocab, pos_word, neg_word, n_train=1000, n_test=500, max_epochs=100, seed=0) -> tuple[TrainingReport, LinearModel]:
    """Corpus -> analytic oracle check -> perceptron -> held-out evaluation.

    The mistake bound uses the analytic discriminant's margin when that
    vector separates the training set; otherwise it falls back to the
    margin of the converged perceptron, which still bounds the mistakes
    because the best margin is at least as large.
    """
    train = generate_corpus(codebook, op, n_train, vocab, pos_word, neg_word, seed=rng.mix(seed, 0))
    test = generate_corpus(codebook, op, n_test, vocab, pos_word, neg_word, seed=rng.mix(seed, 1))
    w_star = analytic_discriminant(codebook, op, pos_word, neg_word)
    model = perceptron_train(train, max_epochs)
    gamma = margin(w_star, train)
    if gamma > 0:
        bound, source = (radius(train) / gamma) ** 2, "analytic"
    elif model.converged:
        bound, source = mistake_bound(train, model.weights), "learned"
    else:
        bound, source = float("inf"), "none"
    report = TrainingReport(
        mistakes=model.mistakes,
        epochs=model.epochs,
        converged=model.converged,
        trainAcc=evaluate(model, train),
        testAcc=evaluate(model, test),
        oracleAcc=evaluate(w_star, train),
        margin=gamma,
        mistakeBound=bound,
        boundSource=source,
    )
    return report, model
