"""The binding operator: multiplication by a fixed seeded random matrix.

Dense operators have +/-1 entries; row i is drawn from the stream keyed by
``(seed, role, i)``, so rows can be produced in any order and the full
matrix never has to live in memory.  Small matrices are cached densely,
medium ones as packed bits, and large ones are regenerated block by block
on every call.  All three paths produce identical outputs.

Normalization modes applied to the raw product ``M v``:

``none``    raw product (linear)
``unit``    raw product scaled so a random input keeps its length on
            average: 1/sqrt(D) for dense matrices, 1 for permutations (linear)
``sqrtd``   every nonzero result rescaled to length sqrt(D)
``binary``  every nonzero result thresholded to +/-1

The zero vector binds to the zero vector in every mode; it plays the role of
the empty state when folding sequences.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import rng
from .core import RecognitionScore, as_vector, recognize, threshold_bipolar
from .errors import DimensionMismatch, InvalidArgument, InvalidDimension, InvalidRoles

VARIANTS = ("dense", "perm")
NORMALIZATIONS = ("none", "unit", "sqrtd", "binary")

# Matrices at or below these sizes are kept in memory between calls.
DENSE_CACHE_BYTES = 1 << 27
PACKED_CACHE_BYTES = 1 << 28
BLOCK_BYTES = 1 << 25


@dataclass(frozen=True)
class BindConfig:
    normalization: str = "sqrtd"
    max_quote_depth: int = 3
    normalize_phrases: bool = False

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise InvalidArgument(f"unknown normalization {self.normalization!r}")
        if self.max_quote_depth < 0:
            raise InvalidArgument("max_quote_depth must be >= 0")


@dataclass(frozen=True)
class BindingOperator:
    role: str
    seed: int
    dimension: int
    variant: str = "dense"
    normalization: str = "sqrtd"

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidDimension(f"dimension must be >= 1, got {self.dimension}")
        if self.variant not in VARIANTS:
            raise InvalidArgument(f"unknown binding variant {self.variant!r}")
        if self.normalization not in NORMALIZATIONS:
            raise InvalidArgument(f"unknown normalization {self.normalization!r}")

    @property
    def linear(self) -> bool:
        return self.normalization in ("none", "unit")

    def with_normalization(self, normalization: str) -> "BindingOperator":
        return dataclasses.replace(self, normalization=normalization)

    def to_record(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_record(cls, record: Mapping) -> "BindingOperator":
        try:
            return cls(
                role=str(record["role"]),
                seed=int(record["seed"]),
                dimension=int(record["dimension"]),
                variant=str(record.get("variant", "dense")),
                normalization=str(record.get("normalization", "sqrtd")),
            )
        except KeyError as exc:
            raise InvalidArgument(f"binding record missing {exc}") from None

    # -- raw product -------------------------------------------------------

    def product(self, v: np.ndarray) -> np.ndarray:
        """``M v`` for a vector or a stack of row vectors, before normalization."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.dimension:
            raise DimensionMismatch(self.dimension, v.shape[-1])
        if self.variant == "perm":
            return v[..., _permutation(self.seed, self.role, self.dimension)]
        return _dense_product(self.seed, self.role, self.dimension, v)

    def finish(self, raw: np.ndarray) -> np.ndarray:
        """Apply this operator's normalization to a raw product."""
        d = self.dimension
        mode = self.normalization
        if mode == "none":
            return raw
        if mode == "unit":
            return raw / np.sqrt(d) if self.variant == "dense" else raw
        norms = np.linalg.norm(raw, axis=-1, keepdims=True)
        nonzero = norms > 0
        if mode == "sqrtd":
            return np.where(nonzero, raw * (np.sqrt(d) / np.where(nonzero, norms, 1.0)), 0.0)
        return np.where(nonzero, threshold_bipolar(raw), 0.0)


def make_binding(seed: int, role: str, dim: int, variant: str = "dense", normalization: str = "sqrtd") -> BindingOperator:
    return BindingOperator(str(role), int(seed), int(dim), variant, normalization)


def operators(records) -> dict[str, BindingOperator]:
    """Role -> operator map from persisted records (e.g. ``codebook.bindings``)."""
    ops = {}
    for rec in records:
        op = BindingOperator.from_record(rec)
        if op.role in ops:
            raise InvalidRoles(f"duplicate binding role {op.role!r}")
        ops[op.role] = op
    return ops


def bind(op: BindingOperator, v) -> np.ndarray:
    """``#(v)``: matrix product followed by the operator's normalization.

    ``v`` may be a single vector or a 2-D stack of row vectors.
    """
    return op.finish(op.product(v))


def bind_power(op: BindingOperator, v, i: int) -> np.ndarray:
    """Apply ``bind`` ``i`` times; ``i = 0`` returns ``v`` unchanged."""
    if i < 0:
        raise InvalidArgument("power must be >= 0")
    out = np.asarray(v, dtype=np.float64)
    for _ in range(i):
        out = bind(op, out)
    return out


def two_input_bind(left: BindingOperator, right: BindingOperator, v1, v2) -> np.ndarray:
    """Non-commutative pair binding ``M_left v1 + M_right v2``."""
    if left.role == right.role:
        raise InvalidRoles(f"two-input binding needs distinct roles, got {left.role!r} twice")
    if left.dimension != right.dimension:
        raise DimensionMismatch(left.dimension, right.dimension)
    if left.normalization != right.normalization or left.variant != right.variant:
        raise InvalidArgument("left and right operators must share variant and normalization")
    return left.finish(left.product(v1) + right.product(v2))


def bound_contains(op: BindingOperator, bound_bundle, candidate, threshold: float | None = None) -> RecognitionScore:
    """Recognize ``candidate`` inside ``bind(op, bundle)`` via ``bind(op, candidate)``.

    The default threshold is half the self-score ``|bind(op, candidate)|^2``,
    the bound analogue of the D/2 rule for plain bundles.
    """
    bound_bundle, candidate = as_vector(bound_bundle), as_vector(candidate)
    if bound_bundle.size != candidate.size:
        raise DimensionMismatch(bound_bundle.size, candidate.size)
    probe = bind(op, candidate)
    if threshold is None:
        threshold = float(probe @ probe) / 2
    return recognize(probe @ bound_bundle, threshold)


def as_matrix(op: BindingOperator) -> np.ndarray:
    """The raw D x D matrix, recovered by binding the unit vectors.

    For analysis at modest D only.
    """
    return op.product(np.eye(op.dimension)).T


# -- matrix generation ----------------------------------------------------


@lru_cache(maxsize=32)
def _permutation(seed: int, role: str, dim: int) -> np.ndarray:
    keys = rng.raw_words(seed, ("perm", role), dim)
    perm = np.argsort(keys, kind="stable")
    perm.setflags(write=False)
    return perm


def _row_words(seed: int, role: str, dim: int, start: int, stop: int) -> np.ndarray:
    wpr = (dim + 63) // 64
    out = np.empty((stop - start, wpr), dtype=np.uint64)
    for k, i in enumerate(range(start, stop)):
        out[k] = rng.raw_words(seed, ("matrix", role, i), wpr)
    return out


@lru_cache(maxsize=8)
def _packed(seed: int, role: str, dim: int) -> np.ndarray:
    words = _row_words(seed, role, dim, 0, dim)
    words.setflags(write=False)
    return words


@lru_cache(maxsize=8)
def _dense(seed: int, role: str, dim: int) -> np.ndarray:
    m = rng.words_to_signs(_packed(seed, role, dim), dim)
    m.setflags(write=False)
    return m


def _dense_product(seed: int, role: str, dim: int, v: np.ndarray) -> np.ndarray:
    if dim * dim * 8 <= DENSE_CACHE_BYTES:
        return v @ _dense(seed, role, dim).T
    wpr = (dim + 63) // 64
    packed = _packed(seed, role, dim) if dim * wpr * 8 <= PACKED_CACHE_BYTES else None
    rows = max(1, BLOCK_BYTES // (8 * dim))
    out = np.empty(v.shape[:-1] + (dim,))
    for start in range(0, dim, rows):
        stop = min(dim, start + rows)
        words = packed[start:stop] if packed is not None else _row_words(seed, role, dim, start, stop)
        out[..., start:stop] = v @ rng.words_to_signs(words, dim).T
    return out
