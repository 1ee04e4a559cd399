"""Counter-based random streams keyed by text labels.

Every random quantity in the package is a pure function of a 64-bit master
seed and a tuple of labels.  The labels are hashed with SHA-256 into a
128-bit Philox key; the i-th output word of that stream depends only on
the key and i, so vectors and matrix rows can be produced lazily, in any
order, with bit-identical results on every platform.
"""
import hashlib
import struct

import numpy as np

_MASK64 = (1 << 64) - 1


def stream_key(seed, *labels):
    h = hashlib.sha256()
    h.update(b"mbat\x00")
    h.update(struct.pack("<Q", int(seed) & _MASK64))
    for label in labels:
        if isinstance(label, (int, np.integer)):
            h.update(b"i" + struct.pack("<q", int(label)))
        else:
            data = str(label).encode("utf-8")
            h.update(b"s" + struct.pack("<I", len(data)) + data)
    return int.from_bytes(h.digest()[:16], "little")


def raw_words(seed, labels, n):
    """First ``n`` uint64 words of the stream keyed by (seed, *labels)."""
    bits = np.random.Philox(key=stream_key(seed, *labels))
    return bits.random_raw(n).astype(np.uint64, copy=False)


def words_to_signs(words, n, dtype=np.float64):
    """Map the low-to-high bits of ``words`` (last axis) to +/-1, truncated to ``n``.

    Bit k of word w becomes component 64*w + k; a set bit is +1.
    """
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8).reshape(words.shape[:-1] + (-1,))
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :n]
    out = bits.astype(dtype)
    out *= 2
    out -= 1
    return out


def bipolar(seed, labels, n):
    return words_to_signs(raw_words(seed, labels, (n + 63) // 64), n)


def generator(seed, *labels):
    """A numpy Generator on the keyed Philox stream, for non-vector draws."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *labels)))


def mix(seed, index):
    """Derive a 64-bit child seed, e.g. for per-trial streams."""
    return stream_key(seed, "mix", int(index)) & _MASK64
