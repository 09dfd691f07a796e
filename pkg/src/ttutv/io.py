"""Binary tensor and TT files, plus a plain-text importer.

Both binary formats are little-endian with a fixed header::

    tensor:  b"TTUTVTEN" | u32 version | u32 order | order x u64 dims | f8 payload
    TT:      b"TTUTVCOR" | u32 version | u32 d | (d+1) x u64 ranks | d x u64 dims
             | core payloads, one after another

All payloads are stored first-index-fastest. Writing is deterministic, so
equal tensors give byte-identical files.
"""

import math
import struct

import numpy as np

from .errors import DimsOverflow, FormatError, MagicMismatch, TruncatedPayload
from .tt import TTTensor

TENSOR_MAGIC = b"TTUTVTEN"
TT_MAGIC = b"TTUTVCOR"
FORMAT_VERSION = 1

# Largest entry count a header may declare (payload must fit a signed 64-bit length).
_MAX_ENTRIES = (2**63 - 1) // 8

_U32 = struct.Struct("<I")
_F8 = np.dtype("<f8")


def _payload(arr):
    return np.asarray(arr, dtype=_F8).tobytes(order="F")


def encode_tensor(T):
    T = np.asarray(T, dtype=np.float64)
    if T.ndim < 1:
        raise ValueError("a tensor file needs order >= 1")
    head = TENSOR_MAGIC + _U32.pack(FORMAT_VERSION) + _U32.pack(T.ndim)
    head += np.asarray(T.shape, dtype="<u8").tobytes()
    return head + _payload(T)


def encode_tt(X):
    head = TT_MAGIC + _U32.pack(FORMAT_VERSION) + _U32.pack(X.order)
    head += np.asarray(X.ranks, dtype="<u8").tobytes()
    head += np.asarray(X.dims, dtype="<u8").tobytes()
    return head + b"".join(_payload(G) for G in X.cores)


class _Reader:
    """Cursor over a byte buffer that reports the offset of any failure."""

    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise FormatError(
                f"file ends inside {what}: need {n} bytes, {len(self.buf) - self.pos} left",
                self.pos,
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def magic(self, expected):
        got = self.buf[:8]
        if got != expected:
            raise MagicMismatch(f"bad magic {got!r}, expected {expected!r}", 0)
        self.pos = 8

    def version(self):
        at = self.pos
        (v,) = _U32.unpack(self.take(4, "version"))
        if v != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {v}", at)

    def u32(self, what):
        return _U32.unpack(self.take(4, what))[0]

    def u64s(self, count, what):
        return [int(v) for v in np.frombuffer(self.take(8 * count, what), dtype="<u8")]

    def floats(self, count, what):
        need = 8 * count
        have = len(self.buf) - self.pos
        if have < need:
            raise TruncatedPayload(need, have, self.pos)
        out = np.frombuffer(self.buf, dtype=_F8, count=count, offset=self.pos)
        self.pos += need
        return out

    def done(self):
        if self.pos != len(self.buf):
            raise FormatError(f"{len(self.buf) - self.pos} trailing bytes", self.pos)


def _check_dims(dims, at):
    if any(n < 1 for n in dims):
        raise DimsOverflow(f"dimensions must be positive, got {tuple(dims)}", at)
    if math.prod(dims) > _MAX_ENTRIES:
        raise DimsOverflow(f"dimensions {tuple(dims)} overflow the addressable size", at)


def decode_tensor(buf):
    rd = _Reader(bytes(buf))
    rd.magic(TENSOR_MAGIC)
    rd.version()
    at = rd.pos
    order = rd.u32("order")
    if order < 1:
        raise FormatError("order must be >= 1", at)
    at = rd.pos
    dims = rd.u64s(order, "dims")
    _check_dims(dims, at)
    data = rd.floats(math.prod(dims), "payload")
    rd.done()
    return data.astype(np.float64).reshape(dims, order="F")


def decode_tt(buf):
    rd = _Reader(bytes(buf))
    rd.magic(TT_MAGIC)
    rd.version()
    at = rd.pos
    d = rd.u32("order")
    if d < 1:
        raise FormatError("order must be >= 1", at)
    at = rd.pos
    ranks = rd.u64s(d + 1, "ranks")
    if ranks[0] != 1 or ranks[-1] != 1 or min(ranks) < 1:
        raise FormatError(f"invalid rank chain {tuple(ranks)}", at)
    at = rd.pos
    dims = rd.u64s(d, "dims")
    _check_dims(dims, at)
    sizes = [ranks[k] * dims[k] * ranks[k + 1] for k in range(d)]
    _check_dims([sum(sizes)], at)
    cores = []
    for k in range(d):
        shape = (ranks[k], dims[k], ranks[k + 1])
        cores.append(rd.floats(sizes[k], f"core {k + 1}").astype(np.float64).reshape(shape, order="F"))
    rd.done()
    return TTTensor(cores)


def write_tensor(path, T):
    with open(path, "wb") as f:
        f.write(encode_tensor(T))


def read_tensor(path):
    with open(path, "rb") as f:
        return decode_tensor(f.read())


def write_tt(path, X):
    with open(path, "wb") as f:
        f.write(encode_tt(X))


def read_tt(path):
    with open(path, "rb") as f:
        return decode_tt(f.read())


def sniff(path):
    """``"tensor"``, ``"tt"`` or ``None`` from the file's magic bytes."""
    with open(path, "rb") as f:
        head = f.read(8)
    return {TENSOR_MAGIC: "tensor", TT_MAGIC: "tt"}.get(head)


def read_mask(path, shape=None):
    """Boolean mask from a tensor file of 0.0/1.0 entries."""
    M = read_tensor(path)
    if shape is not None and M.shape != tuple(shape):
        raise FormatError(f"mask shape {M.shape} differs from tensor shape {tuple(shape)}", 16)
    if not np.all((M == 0.0) | (M == 1.0)):
        raise FormatError("mask entries must be 0.0 or 1.0", 16)
    return M == 1.0


def read_text_tensor(path):
    """Tensor from text: a first line of dims, then one value per line.

    Blank lines and lines starting with ``#`` are skipped. Dims may be
    separated by spaces, commas or ``x`` (``3x4x5``). Values fill the
    tensor first index fastest.
    """
    with open(path, encoding="utf-8") as f:
        lines = [ln.strip() for ln in f]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise FormatError("empty text tensor", 0)
    try:
        dims = [int(t) for t in lines[0].replace(",", " ").replace("x", " ").split()]
    except ValueError:
        raise FormatError(f"bad dims header {lines[0]!r}", 0) from None
    if not dims:
        raise FormatError("empty dims header", 0)
    _check_dims(dims, 0)
    try:
        vals = np.array([float(v) for v in lines[1:]], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"bad value: {exc}", 0) from None
    if vals.size != math.prod(dims):
        raise FormatError(f"{vals.size} values for dims {tuple(dims)}", 0)
    return vals.reshape(dims, order="F")
