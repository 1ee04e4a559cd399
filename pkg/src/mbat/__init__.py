"""Matrix Binding of Additive Terms: a vector symbolic architecture toolkit."""

__version__ = "0.1.0"

from .binding import BindConfig, BindingOperator, bind, bind_power, bound_contains, make_binding, two_input_bind
from .core import (
    Codebook,
    RecognitionScore,
    bundle,
    contains,
    cosine,
    derive_vector,
    dot,
    negate,
    normalize_to,
    scale,
    threshold_bipolar,
)
from .structure import Phrase, SentenceSpec, encode_expr, encode_phrase, encode_sentence, parse_sentence_spec, step_state

__all__ = [
    "BindConfig",
    "BindingOperator",
    "Codebook",
    "Phrase",
    "RecognitionScore",
    "SentenceSpec",
    "bind",
    "bind_power",
    "bound_contains",
    "bundle",
    "contains",
    "cosine",
    "derive_vector",
    "dot",
    "encode_expr",
    "encode_phrase",
    "encode_sentence",
    "make_binding",
    "negate",
    "normalize_to",
    "parse_sentence_spec",
    "scale",
    "step_state",
    "threshold_bipolar",
    "two_input_bind",
]
