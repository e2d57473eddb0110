"""Byte-level helpers: length prefixing and deterministic byte expansion.

Length prefixing keeps multi-field hash inputs unambiguous; expansion turns
SHA-256 into an arbitrary-length deterministic stream with domain separation.
"""

import hashlib
import struct


def length_prefixed(*fields: bytes) -> bytes:
    """Concatenate fields, each preceded by its u32 big-endian length."""
    out = bytearray()
    for field in fields:
        out += struct.pack(">I", len(field))
        out += field
    return bytes(out)


def expand_bytes(tag: bytes, data: bytes, n: int) -> bytes:
    """Derive n deterministic bytes from (tag, data) with SHA-256 in counter
    mode. tag must be non-empty (domain separation)."""
    if not tag:
        raise ValueError("domain tag must be non-empty")
    seed = length_prefixed(tag, data)
    out = bytearray()
    counter = 0
    while len(out) < n:
        out += hashlib.sha256(struct.pack(">I", counter) + seed).digest()
        counter += 1
    return bytes(out[:n])


def hash_to_int_wide(tag: bytes, data: bytes, modulus: int, extra_bits: int = 128) -> int:
    """Reduce an expanded byte stream of >= bitlen(modulus)+extra_bits bits
    modulo ``modulus``. The widening keeps the reduction bias below
    2**-extra_bits."""
    nbytes = (modulus.bit_length() + extra_bits + 7) // 8
    return int.from_bytes(expand_bytes(tag, data, nbytes), "big") % modulus
