"""Two-layer near-lossless HDR codec with a baseline JPEG base layer."""

from ._core import (
    CSV_HEADER,
    FormatError,
    HdrzsqError,
    IntegrityError,
    UsageError,
    base_layer,
    decode,
    decode_file,
    decode_float,
    encode,
    encode_file,
    encode_float,
    inspect,
    measure,
    sweep,
)

__all__ = [
    "CSV_HEADER",
    "FormatError",
    "HdrzsqError",
    "IntegrityError",
    "UsageError",
    "base_layer",
    "decode",
    "decode_file",
    "decode_float",
    "encode",
    "encode_file",
    "encode_float",
    "inspect",
    "measure",
    "sweep",
]
