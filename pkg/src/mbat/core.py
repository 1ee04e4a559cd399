"""Hypervectors, seeded codebooks, bundling and dot-product recognition.

A hypervector is a plain 1-D ``float64`` numpy array.  Bipolar vectors hold
only -1/+1; bundles and bound vectors are continuous.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import rng
from .errors import (
    CorruptFile,
    DimensionMismatch,
    InvalidArgument,
    InvalidDimension,
    UndefinedCosine,
    UndefinedNormalization,
    UnknownSymbol,
)

CODEBOOK_FORMAT = "mbat-codebook"
CODEBOOK_VERSION = 1
TAG_PREFIX = "@"


def as_vector(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise InvalidDimension(f"expected a nonempty 1-D vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument("vector has non-finite components")
    return a


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch(a.shape[-1], b.shape[-1])


def is_bipolar(v) -> bool:
    v = np.asarray(v)
    return bool(np.all(np.abs(v) == 1.0))


def derive_vector(master_seed: int, symbol: str, dim: int) -> np.ndarray:
    """Bipolar vector for ``symbol``; component i is bit i of its keyed stream."""
    if int(dim) < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {dim}")
    return rng.bipolar(master_seed, ("vector", symbol), int(dim))


def bundle(vs: Sequence) -> np.ndarray:
    if len(vs) == 0:
        raise InvalidArgument("cannot bundle an empty list")
    vs = [as_vector(v) for v in vs]
    for v in vs[1:]:
        _same_dim(vs[0], v)
    return np.sum(vs, axis=0)


def dot(a, b) -> float:
    a, b = as_vector(a), as_vector(b)
    _same_dim(a, b)
    return float(a @ b)


def cosine(a, b) -> float:
    a, b = as_vector(a), as_vector(b)
    _same_dim(a, b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise UndefinedCosine("cosine of a zero vector")
    return float(np.clip((a @ b) / (na * nb), -1.0, 1.0))


def threshold_bipolar(v) -> np.ndarray:
    """+1 where the component is >= 0, else -1.  Works on stacked vectors too."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v >= 0, 1.0, -1.0)


def negate(v) -> np.ndarray:
    return -as_vector(v)


def scale(v, c: float) -> np.ndarray:
    return as_vector(v) * float(c)


def normalize_to(v, target_length: float) -> np.ndarray:
    v = as_vector(v)
    n = np.linalg.norm(v)
    if n == 0:
        raise UndefinedNormalization("cannot rescale the zero vector")
    return v * (float(target_length) / n)


def checksum(v) -> str:
    """Short hex digest of the little-endian float64 bytes of ``v``."""
    data = np.ascontiguousarray(v, dtype="<f8").tobytes()
    return hashlib.sha256(data).hexdigest()[:16]


@dataclass(frozen=True)
class RecognitionScore:
    score: float
    threshold: float
    decision: bool


def recognize(score: float, threshold: float) -> RecognitionScore:
    # ties count as members
    return RecognitionScore(float(score), float(threshold), bool(score >= threshold))


def contains(bundle_v, candidate, threshold: float | None = None) -> RecognitionScore:
    """Test whether ``candidate`` was bundled into ``bundle_v``.

    A member scores about D, a non-member about 0; the default threshold is
    the midpoint D/2.
    """
    bundle_v, candidate = as_vector(bundle_v), as_vector(candidate)
    _same_dim(bundle_v, candidate)
    if threshold is None:
        threshold = bundle_v.size / 2
    return recognize(candidate @ bundle_v, threshold)


def tag_symbol(name: str) -> str:
    return name if name.startswith(TAG_PREFIX) else TAG_PREFIX + name


def is_tag(symbol: str) -> bool:
    return symbol.startswith(TAG_PREFIX)


class Codebook:
    """Deterministic symbol -> bipolar vector mapping.

    Vectors are derived from ``(master_seed, symbol, dimension)`` and never
    stored on disk.  ``policy`` decides what happens when an unlisted symbol
    is looked up: ``"derive"`` computes it anyway, ``"reject"`` raises.

    ``bindings`` carries binding-operator records (plain dicts) so a single
    file describes the whole encoding setup; see ``mbat.binding``.
    """

    def __init__(
        self,
        dimension: int,
        master_seed: int,
        symbols: Iterable[str] = (),
        *,
        policy: str = "derive",
        bindings: Sequence[Mapping] = (),
        pinned: Mapping[str, np.ndarray] | None = None,
    ):
        if int(dimension) < 1:
            raise InvalidDimension(f"dimension must be >= 1, got {dimension}")
        if policy not in ("derive", "reject"):
            raise InvalidArgument(f"unknown symbol policy {policy!r}")
        self.dimension = int(dimension)
        self.master_seed = int(master_seed)
        self.policy = policy
        seen = {}
        for s in symbols:
            if not isinstance(s, str) or not s:
                raise InvalidArgument(f"bad symbol {s!r}")
            seen.setdefault(s, None)
        self._symbols = tuple(seen)
        self._index = {s: i for i, s in enumerate(self._symbols)}
        self.bindings = tuple(dict(b) for b in bindings)
        self._cache: dict[str, np.ndarray] = {}
        self._pinned = {}
        for s, v in (pinned or {}).items():
            v = as_vector(v)
            if v.size != self.dimension or not is_bipolar(v):
                raise InvalidArgument(f"pinned vector for {s!r} is not bipolar of length {dimension}")
            self._pinned[s] = v
            v.setflags(write=False)

    @classmethod
    def from_vectors(cls, vectors: Mapping[str, Sequence[float]], master_seed: int = 0) -> "Codebook":
        """Codebook whose listed symbols use the given vectors verbatim."""
        vectors = {s: as_vector(v) for s, v in vectors.items()}
        dims = {v.size for v in vectors.values()}
        if len(dims) != 1:
            raise DimensionMismatch(*sorted(dims)[:2]) if len(dims) > 1 else InvalidArgument("no vectors")
        return cls(dims.pop(), master_seed, vectors, pinned=vectors)

    @property
    def symbols(self) -> tuple[str, ...]:
        return self._symbols

    def __len__(self):
        return len(self._symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def vector(self, symbol: str) -> np.ndarray:
        v = self._cache.get(symbol)
        if v is not None:
            return v
        if symbol in self._pinned:
            v = self._pinned[symbol]
        elif symbol in self._index or self.policy == "derive":
            v = derive_vector(self.master_seed, symbol, self.dimension)
            v.setflags(write=False)
        else:
            raise UnknownSymbol(symbol)
        self._cache[symbol] = v
        return v

    __getitem__ = vector

    def matrix(self, symbols: Sequence[str] | None = None) -> np.ndarray:
        """Stack vectors row-wise, in codebook order by default."""
        symbols = self._symbols if symbols is None else symbols
        if len(symbols) == 0:
            return np.zeros((0, self.dimension))
        return np.stack([self.vector(s) for s in symbols])

    def extend(self, symbols: Iterable[str]) -> "Codebook":
        """New codebook with ``symbols`` appended (existing order kept)."""
        return Codebook(
            self.dimension,
            self.master_seed,
            list(self._symbols) + list(symbols),
            policy=self.policy,
            bindings=self.bindings,
            pinned=self._pinned,
        )

    def with_bindings(self, records: Sequence[Mapping]) -> "Codebook":
        return Codebook(
            self.dimension,
            self.master_seed,
            self._symbols,
            policy=self.policy,
            bindings=records,
            pinned=self._pinned,
        )

    # -- file format -----------------------------------------------------

    def to_text(self) -> str:
        if self._pinned:
            raise InvalidArgument("codebooks with pinned vectors cannot be serialized")
        doc = {
            "format": CODEBOOK_FORMAT,
            "version": CODEBOOK_VERSION,
            "dimension": self.dimension,
            "master_seed": self.master_seed,
            "symbols": list(self._symbols),
            "bindings": [dict(sorted(b.items())) for b in self.bindings],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_text(cls, text: str, policy: str = "derive") -> "Codebook":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorruptFile(f"codebook is not valid JSON: {exc}") from None
        if not isinstance(doc, dict) or doc.get("format") != CODEBOOK_FORMAT:
            raise CorruptFile("not an mbat codebook")
        if doc.get("version") != CODEBOOK_VERSION:
            raise CorruptFile(f"unsupported codebook version {doc.get('version')!r}")
        try:
            dim = doc["dimension"]
            seed = doc["master_seed"]
            symbols = doc["symbols"]
            bindings = doc.get("bindings", [])
        except KeyError as exc:
            raise CorruptFile(f"codebook missing field {exc}") from None
        if not isinstance(dim, int) or not isinstance(seed, int) or not isinstance(symbols, list):
            raise CorruptFile("codebook fields have the wrong types")
        if len(set(symbols)) != len(symbols):
            raise CorruptFile("duplicate symbols in codebook")
        if not isinstance(bindings, list) or not all(isinstance(b, dict) for b in bindings):
            raise CorruptFile("bindings must be a list of records")
        try:
            return cls(dim, seed, symbols, policy=policy, bindings=bindings)
        except (InvalidArgument, InvalidDimension) as exc:
            raise CorruptFile(str(exc)) from None

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path, policy: str = "derive") -> "Codebook":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptFile(str(exc)) from None
        return cls.from_text(text, policy=policy)

    def __repr__(self):
        return f"Codebook(dimension={self.dimension}, master_seed={self.master_seed}, symbols={len(self)})"
