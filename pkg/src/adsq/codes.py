"""Sign quantization, asymmetric code concatenation, bit packing, and
linear-scan Hamming search.

Packed layout: one row per item, MSB-first within each byte, bit 1 means
+1, rows padded to a byte boundary with zero bits. For +-1 codes of equal
length, popcount distance and inner product are tied by
dist = (k_total - <a, b>) / 2.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .encoder import EncoderParams, forward
from .errors import FormatError

CODES_MAGIC = b"ADSQB001"

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


@dataclass(frozen=True)
class PackedCodes:
    """Bit-packed +-1 code matrix."""

    n: int
    k_total: int
    payload: np.ndarray  # n x ceil(k_total/8), uint8

    def __post_init__(self):
        row_bytes = (self.k_total + 7) // 8
        if self.payload.shape != (self.n, row_bytes):
            raise ValueError(
                f"payload shape {self.payload.shape} does not match "
                f"n={self.n}, k_total={self.k_total}")

    def row(self, i) -> np.ndarray:
        return self.payload[i]


def quantize_sign(values) -> np.ndarray:
    """Elementwise sign with sign(0) = +1."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("quantize_sign requires finite input")
    return np.where(arr >= 0, 1.0, -1.0)


def encode_query(x, imgx_params: EncoderParams, imgy_params: EncoderParams) -> np.ndarray:
    """Concatenated code for one feature vector: x-network half first."""
    return encode_matrix(np.asarray(x, dtype=np.float64)[None, :], imgx_params, imgy_params)[0]


def encode_matrix(x, imgx_params: EncoderParams, imgy_params: EncoderParams) -> np.ndarray:
    """Row-wise codes of length 2*k_half for a feature matrix."""
    half_x = quantize_sign(forward(imgx_params, x).u)
    half_y = quantize_sign(forward(imgy_params, x).u)
    return np.concatenate([half_x, half_y], axis=1)


def pack(codes) -> PackedCodes:
    arr = np.asarray(codes, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"code matrix must be 2-D, got shape {arr.shape}")
    if not np.isin(arr, (-1.0, 1.0)).all():
        raise ValueError("pack requires entries exactly -1 or +1")
    bits = (arr > 0).astype(np.uint8)
    payload = np.packbits(bits, axis=1)
    return PackedCodes(n=arr.shape[0], k_total=arr.shape[1], payload=payload)


def unpack(packed: PackedCodes) -> np.ndarray:
    bits = np.unpackbits(packed.payload, axis=1, count=packed.k_total)
    return bits.astype(np.float64) * 2.0 - 1.0


def hamming_distance(a, b) -> int:
    """Popcount of XOR over two packed rows of equal width."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError(f"packed rows differ in length: {a.shape} vs {b.shape}")
    return int(_POPCOUNT8[np.bitwise_xor(a, b)].sum())


def distances_to_all(query_row, db: PackedCodes) -> np.ndarray:
    """Hamming distances from one packed query row to every database row."""
    q = np.asarray(query_row, dtype=np.uint8)
    if q.shape != (db.payload.shape[1],):
        raise ValueError("query row width does not match database")
    return _POPCOUNT8[np.bitwise_xor(db.payload, q)].sum(axis=1)


def search_topk(query_row, db: PackedCodes, k: int) -> np.ndarray:
    """Indices of the k nearest database rows, ascending distance; ties
    broken by ascending database index."""
    if k > db.n:
        raise ValueError(f"k={k} exceeds database size {db.n}")
    dist = distances_to_all(query_row, db)
    return np.argsort(dist, kind="stable")[:k]


def write_codes(path, packed: PackedCodes):
    with open(path, "wb") as fh:
        fh.write(CODES_MAGIC)
        fh.write(struct.pack("<II", packed.n, packed.k_total))
        fh.write(np.ascontiguousarray(packed.payload).tobytes())


def load_codes(path) -> PackedCodes:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16 or blob[:8] != CODES_MAGIC:
        raise FormatError(f"{path}: missing or malformed codes-file magic")
    n, k_total = struct.unpack_from("<II", blob, 8)
    row_bytes = (k_total + 7) // 8
    expected = 16 + n * row_bytes
    if len(blob) != expected:
        raise FormatError(
            f"{path}: truncated or oversized payload (expected {expected} bytes, "
            f"file has {len(blob)})")
    payload = np.frombuffer(blob, dtype=np.uint8, offset=16).reshape(n, row_bytes).copy()
    pad_bits = 8 * row_bytes - k_total
    if pad_bits and np.any(payload[:, -1] & ((1 << pad_bits) - 1)):
        raise FormatError(f"{path}: nonzero padding bits in packed payload")
    return PackedCodes(n=n, k_total=k_total, payload=payload)
