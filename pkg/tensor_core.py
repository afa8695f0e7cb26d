"""
tensor_core.py

Dense multi-index tensors with explicit slot kinds, signature-aware
raising/lowering, contraction, and symmetry testing. Every other
module computes on plain numpy arrays and wraps results into
DenseTensor where slot bookkeeping matters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from errors import ConfigError, ShapeError, SingularMetricError, SlotKindError
from utils.constants import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, SINGULAR_DET_THRESHOLD

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# SIGNATURE
# ------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    """
    Diagonal of the flat frame metric eta.

    The entry eta_(B)(B) doubles as the sign epsilon_(B) wherever a
    signature sign multiplies a single frame index.
    """

    signs: tuple[int, ...]

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        if not signs:
            raise ConfigError("signature must have at least one entry")
        if any(s not in (1, -1) for s in signs):
            raise ConfigError(f"signature entries must be +1 or -1, got {self.signs}")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_string(cls, text: str) -> "Signature":
        """
        Parse '(-,+,+,+)', '-,+,+,+', '-+++' or '-1,1,1,1'.

        Raises
        ------
        ConfigError
            Empty text or unknown entry.
        """
        body = text.strip().strip("()").replace(" ", "")
        if not body:
            raise ConfigError("empty signature")
        parts = body.split(",") if "," in body else list(body)
        table = {"+": 1, "-": -1, "+1": 1, "-1": -1, "1": 1}
        try:
            return cls(tuple(table[p] for p in parts))
        except KeyError as exc:
            raise ConfigError(f"bad signature entry {exc.args[0]!r} in {text!r}") from None

    @classmethod
    def minus_plus(cls, minus: int, plus: int) -> "Signature":
        """`minus` leading -1 entries followed by `plus` +1 entries."""
        return cls((-1,) * minus + (1,) * plus)

    @property
    def n(self) -> int:
        return len(self.signs)

    @property
    def p_plus(self) -> int:
        return sum(1 for s in self.signs if s > 0)

    @property
    def q_minus(self) -> int:
        return sum(1 for s in self.signs if s < 0)

    @property
    def eta(self) -> np.ndarray:
        return np.diag(np.array(self.signs, dtype=float))

    @property
    def diagonal(self) -> np.ndarray:
        return np.array(self.signs, dtype=float)

    def __str__(self) -> str:
        return "(" + ",".join("+" if s > 0 else "-" for s in self.signs) + ")"


# ------------------------------------------------------------
# TOLERANCE
# ------------------------------------------------------------

@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and non-negative, got {value}")

    def accepts(self, deviation: float, scale: float = 0.0) -> bool:
        """True when deviation <= abs_tol + rel_tol * scale."""
        return deviation <= self.abs_tol + self.rel_tol * abs(scale)


# ------------------------------------------------------------
# DENSE TENSOR
# ------------------------------------------------------------

class SlotKind(str, Enum):
    COORD_UP = "coord_up"
    COORD_DOWN = "coord_down"
    FRAME_UP = "frame_up"
    FRAME_DOWN = "frame_down"

    @property
    def is_upper(self) -> bool:
        return self in (SlotKind.COORD_UP, SlotKind.FRAME_UP)

    @property
    def is_frame(self) -> bool:
        return self in (SlotKind.FRAME_UP, SlotKind.FRAME_DOWN)

    def flipped(self) -> "SlotKind":
        return {
            SlotKind.COORD_UP: SlotKind.COORD_DOWN,
            SlotKind.COORD_DOWN: SlotKind.COORD_UP,
            SlotKind.FRAME_UP: SlotKind.FRAME_DOWN,
            SlotKind.FRAME_DOWN: SlotKind.FRAME_UP,
        }[self]


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """
    Row-major tensor with per-slot kind tags.

    Parameters
    ----------
    dims : tuple[int, ...]
        Extent of each slot.
    slot_kinds : tuple[SlotKind, ...]
        Kind of each slot, same length as dims.
    data : np.ndarray
        Flat row-major values; length is the product of dims.
    """

    dims: tuple[int, ...]
    slot_kinds: tuple[SlotKind, ...]
    data: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        kinds = tuple(SlotKind(k) for k in self.slot_kinds)
        data = np.array(self.data, dtype=float).ravel()
        if len(kinds) != len(dims):
            raise ShapeError(f"{len(kinds)} slot kinds for rank {len(dims)}")
        if data.size != int(np.prod(dims, dtype=int)):
            raise ShapeError(f"data length {data.size} does not match dims {dims}")
        data.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "slot_kinds", kinds)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array, slot_kinds: Sequence[Union[SlotKind, str]]) -> "DenseTensor":
        array = np.asarray(array, dtype=float)
        return cls(array.shape, tuple(slot_kinds), array.ravel())

    @property
    def rank(self) -> int:
        return len(self.dims)

    @property
    def array(self) -> np.ndarray:
        return self.data.reshape(self.dims)

    def norm(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def __add__(self, other: "DenseTensor") -> "DenseTensor":
        _require_same_layout(self, other)
        return DenseTensor(self.dims, self.slot_kinds, self.data + other.data)

    def __sub__(self, other: "DenseTensor") -> "DenseTensor":
        _require_same_layout(self, other)
        return DenseTensor(self.dims, self.slot_kinds, self.data - other.data)

    def __rmul__(self, scalar: float) -> "DenseTensor":
        return DenseTensor(self.dims, self.slot_kinds, float(scalar) * self.data)


def _require_same_layout(a: DenseTensor, b: DenseTensor) -> None:
    if a.dims != b.dims or a.slot_kinds != b.slot_kinds:
        raise ShapeError(f"layout mismatch: {a.dims}/{a.slot_kinds} vs {b.dims}/{b.slot_kinds}")


MetricLike = Union[Signature, DenseTensor]


# ------------------------------------------------------------
# METRIC HELPERS
# ------------------------------------------------------------

def check_nondegenerate(g: np.ndarray) -> float:
    """
    Return det(g), raising when |det| < threshold * scale**n.

    Raises
    ------
    SingularMetricError
        Determinant below the singularity threshold.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    scale = float(np.max(np.abs(g))) if g.size else 0.0
    det = float(np.linalg.det(g))
    if scale == 0.0 or abs(det) < SINGULAR_DET_THRESHOLD * scale ** n:
        raise SingularMetricError(f"singular metric (det={det:.3e}, scale={scale:.3e})")
    return det


def metric_inverse(g: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric non-degenerate metric, symmetrized."""
    check_nondegenerate(g)
    inv = np.linalg.inv(g)
    return 0.5 * (inv + inv.T)


def _metric_matrices(metric: MetricLike) -> tuple[np.ndarray, np.ndarray, bool]:
    """Return (lower, upper, is_frame) matrices of a metric argument."""
    if isinstance(metric, Signature):
        eta = metric.eta
        return eta, eta, True
    if metric.rank != 2 or metric.dims[0] != metric.dims[1]:
        raise ShapeError(f"metric must be square rank 2, got dims {metric.dims}")
    m = metric.array
    if np.max(np.abs(m - m.T)) > DEFAULT_ABS_TOL * max(1.0, metric.norm()):
        raise ShapeError("metric is not symmetric")
    kinds = metric.slot_kinds
    if kinds[0] != kinds[1]:
        raise SlotKindError("metric slots must have the same kind")
    inv = metric_inverse(m)
    if kinds[0].is_upper:
        return inv, m, kinds[0].is_frame
    return m, inv, kinds[0].is_frame


# ------------------------------------------------------------
# OPERATIONS
# ------------------------------------------------------------

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def contract(t: DenseTensor, slot_a: int, slot_b: int, metric: MetricLike | None = None) -> DenseTensor:
    """
    Contract two slots of a tensor.

    One upper and one lower slot of the same family are traced directly.
    Two like slots need a metric (a Signature for frame slots, a rank-2
    coordinate metric for coordinate slots) to mediate the sum.

    Returns
    -------
    DenseTensor
        Rank reduced by two; remaining slots keep their order.
    """
    if slot_a == slot_b:
        raise ShapeError("cannot contract a slot with itself")
    if not (0 <= slot_a < t.rank and 0 <= slot_b < t.rank):
        raise ShapeError(f"slots ({slot_a}, {slot_b}) out of range for rank {t.rank}")
    if t.dims[slot_a] != t.dims[slot_b]:
        raise ShapeError(f"extent mismatch {t.dims[slot_a]} vs {t.dims[slot_b]}")
    kind_a, kind_b = t.slot_kinds[slot_a], t.slot_kinds[slot_b]
    if kind_a.is_frame != kind_b.is_frame:
        raise SlotKindError("cannot contract a frame slot with a coordinate slot")

    letters = list(_LETTERS[: t.rank])
    keep = [i for i in range(t.rank) if i not in (slot_a, slot_b)]
    out = "".join(letters[i] for i in keep)

    if kind_a.is_upper != kind_b.is_upper:
        letters[slot_b] = letters[slot_a]
        result = np.einsum("".join(letters) + "->" + out, t.array)
    else:
        if metric is None:
            raise SlotKindError("contracting two like slots requires a metric")
        lower, upper, is_frame = _metric_matrices(metric)
        if is_frame != kind_a.is_frame:
            raise SlotKindError("metric family does not match the contracted slots")
        mediator = upper if not kind_a.is_upper else lower
        if mediator.shape[0] != t.dims[slot_a]:
            raise ShapeError("metric extent does not match the contracted slots")
        spec = "".join(letters) + f",{letters[slot_a]}{letters[slot_b]}->" + out
        result = np.einsum(spec, t.array, mediator)

    return DenseTensor.from_array(result, [t.slot_kinds[i] for i in keep])


def check_symmetry(t: DenseTensor, perm: Sequence[int], sign: int, tol: Tolerance | None = None) -> float:
    """
    Maximum deviation of t from sign * (t with slots permuted).

    Parameters
    ----------
    t : DenseTensor
        Input tensor.
    perm : sequence of int
        Permutation of slot positions; permuted slots must share extents.
    sign : int
        +1 for symmetry, -1 for antisymmetry.
    tol : Tolerance, optional
        When given, a deviation above tolerance is logged.

    Returns
    -------
    float
        max |t_perm(I) - sign * t_I| over all index tuples.
    """
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(t.rank)):
        raise ShapeError(f"{perm} is not a permutation of {t.rank} slots")
    if any(t.dims[p] != t.dims[i] for i, p in enumerate(perm)):
        raise ShapeError(f"permutation {perm} mixes slots of different extents {t.dims}")
    if t.data.size == 0:
        return 0.0
    arr = t.array
    deviation = float(np.max(np.abs(np.transpose(arr, perm) - sign * arr)))
    if tol is not None and not tol.accepts(deviation, t.norm()):
        logger.debug("symmetry %s (sign %+d) violated by %.3e", perm, sign, deviation)
    return deviation


def raise_lower(t: DenseTensor, slot: int, metric: MetricLike, direction: str) -> DenseTensor:
    """
    Raise or lower one slot with a metric.

    Parameters
    ----------
    direction : {"up", "down"}
        "up" raises a lower slot, "down" lowers an upper slot.

    Raises
    ------
    SingularMetricError
        Metric determinant below threshold.
    SlotKindError
        Slot already in the requested position or metric family mismatch.
    """
    if direction not in ("up", "down"):
        raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
    kind = t.slot_kinds[slot]
    if kind.is_upper == (direction == "up"):
        raise SlotKindError(f"slot {slot} is already {direction}")
    lower, upper, is_frame = _metric_matrices(metric)
    if is_frame != kind.is_frame:
        raise SlotKindError("metric family does not match the slot")
    matrix = upper if direction == "up" else lower
    if matrix.shape[0] != t.dims[slot]:
        raise ShapeError("metric extent does not match the slot")

    moved = np.tensordot(matrix, t.array, axes=([1], [slot]))
    moved = np.moveaxis(moved, 0, slot)
    kinds = list(t.slot_kinds)
    kinds[slot] = kind.flipped()
    return DenseTensor.from_array(moved, kinds)


# ------------------------------------------------------------
# CURVATURE SYMMETRY RESIDUALS
# ------------------------------------------------------------

def riemann_symmetry_residuals(t: np.ndarray) -> dict[str, float]:
    """Named deviations of a rank-4 array from the Riemann symmetries."""
    if t.size == 0:
        return {"antisym_ab": 0.0, "antisym_cd": 0.0, "pair_swap": 0.0, "bianchi": 0.0}
    return {
        "antisym_ab": float(np.max(np.abs(t + t.transpose(1, 0, 2, 3)))),
        "antisym_cd": float(np.max(np.abs(t + t.transpose(0, 1, 3, 2)))),
        "pair_swap": float(np.max(np.abs(t - t.transpose(2, 3, 0, 1)))),
        "bianchi": float(np.max(np.abs(t + t.transpose(0, 2, 3, 1) + t.transpose(0, 3, 1, 2)))),
    }
