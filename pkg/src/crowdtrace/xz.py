"""Quadtree space-filling-curve codes for extended objects, and key planning.

A segment's bounding box maps to one quadtree cell: the deepest cell at least
as large as the box on both axes that contains the box's min corner. Because
the cell, doubled in width and height from its min corner, always covers the
box, range planning over doubled cells never misses a stored segment.

Cells are numbered by depth-first pre-order, so every subtree is one
contiguous code interval. Row keys prepend a time-period number and a shard
byte; all fields are big-endian so byte order equals logical order.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field

from .model import MBR, WORLD, Segment, TimeRange


class TimeUnit(enum.Enum):
    """Calendar-free time units used for period numbering."""

    SECOND = 1
    DAY = 86_400
    WEEK = 604_800
    MONTH = 2_592_000  # 30 days
    YEAR = 31_536_000  # 365 days

    @property
    def seconds(self) -> int:
        return self.value


@dataclass(frozen=True, slots=True)
class XzConfig:
    """Index geometry: quadtree depth, world extent and time binning."""

    resolution: int = 15
    world: MBR = field(default_factory=lambda: WORLD)
    epoch: int = 0
    period_len: int = 86_400
    unit: TimeUnit = TimeUnit.SECOND
    num_shards: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.resolution <= 31:
            raise ValueError(f"resolution must be in [1, 31]: {self.resolution}")
        if self.period_len <= 0:
            raise ValueError("period_len must be positive")
        if not 1 <= self.num_shards <= 256:
            raise ValueError("num_shards must be in [1, 256]")

    @property
    def period_seconds(self) -> int:
        """Length of one time period in seconds."""
        return self.period_len * self.unit.seconds

    def total_elements(self) -> int:
        """Number of quadtree cells at all depths up to the resolution."""
        return (4 ** (self.resolution + 1) - 1) // 3


@dataclass(frozen=True, slots=True)
class XzElement:
    """A quadtree cell as its quadrant-digit path from the root."""

    digits: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(d not in (0, 1, 2, 3) for d in self.digits):
            raise ValueError(f"digits must be in 0..3: {self.digits}")

    def cell(self) -> tuple[float, float, float]:
        """(x0, y0, side) of the cell in unit-square coordinates."""
        x0 = y0 = 0.0
        side = 1.0
        for d in self.digits:
            side /= 2.0
            x0 += (d & 1) * side
            y0 += (d >> 1) * side
        return x0, y0, side


@dataclass(frozen=True, slots=True)
class STKey:
    """Decoded row key: shard byte, period number, cell code, segment id."""

    shard: int
    bin: int
    xz2: int
    sid: str

    def packed(self) -> bytes:
        return struct.pack(">BIQ", self.shard, self.bin, self.xz2) + self.sid.encode("utf-8")

    @classmethod
    def parse(cls, key: bytes) -> "STKey":
        shard, bin_, xz2 = struct.unpack_from(">BIQ", key)
        return cls(shard, bin_, xz2, key[13:].decode("utf-8"))


@dataclass(frozen=True, slots=True)
class ScanRange:
    """Byte-key interval [low, high) handed to the ordered store."""

    low: bytes
    high: bytes

    def __post_init__(self) -> None:
        if self.low >= self.high:
            raise ValueError("scan range must be non-empty")


def _normalize(mbr: MBR, world: MBR) -> tuple[float, float, float, float]:
    w = world.max_lon - world.min_lon
    h = world.max_lat - world.min_lat
    return (
        (mbr.min_lon - world.min_lon) / w,
        (mbr.min_lat - world.min_lat) / h,
        (mbr.max_lon - world.min_lon) / w,
        (mbr.max_lat - world.min_lat) / h,
    )


def xz2_element(mbr: MBR, cfg: XzConfig) -> XzElement:
    """Cell assignment for an extended object.

    Picks the deepest depth (up to the resolution) whose cell size covers the
    box on both axes, then the cell at that depth containing the box's min
    corner. The cell doubled from its min corner is then guaranteed to cover
    the whole box.
    """
    if not cfg.world.contains(mbr):
        raise ValueError(f"mbr outside indexed world: {mbr}")
    x0, y0, x1, y1 = _normalize(mbr, cfg.world)
    extent = max(x1 - x0, y1 - y0)

    if extent <= 0.0:
        depth = cfg.resolution
    else:
        depth = min(cfg.resolution, max(0, int(math.floor(-math.log2(extent)))))
        while depth < cfg.resolution and 0.5 ** (depth + 1) >= extent:
            depth += 1
        while depth > 0 and 0.5**depth < extent:
            depth -= 1

    digits = []
    cx = cy = 0.0
    side = 1.0
    for _ in range(depth):
        side /= 2.0
        xbit = int(x0 >= cx + side)
        ybit = int(y0 >= cy + side)
        digits.append(xbit | (ybit << 1))
        cx += xbit * side
        cy += ybit * side
    return XzElement(tuple(digits))


def subtree_size(depth: int, resolution: int) -> int:
    """Number of cells in the subtree rooted at a depth-``depth`` cell."""
    return (4 ** (resolution - depth + 1) - 1) // 3


def sequence_code(element: XzElement, cfg: XzConfig) -> int:
    """Pre-order position of a cell among all cells up to the resolution."""
    if len(element.digits) > cfg.resolution:
        raise ValueError("element deeper than the configured resolution")
    code = 0
    for i, digit in enumerate(element.digits, start=1):
        code += digit * (4 ** (cfg.resolution - i + 1) - 1) // 3 + 1
    return code


def bin_of(t: int, cfg: XzConfig) -> int:
    """Time-period number of a timestamp: whole units since epoch / period."""
    if t < cfg.epoch:
        raise ValueError(f"timestamp {t} precedes the index epoch {cfg.epoch}")
    units = (t - cfg.epoch) // cfg.unit.seconds
    return units // cfg.period_len


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def encode_key(seg: Segment, cfg: XzConfig) -> STKey:
    """Row key of a segment. The segment must fit inside one time period."""
    b = bin_of(seg.st, cfg)
    if bin_of(seg.et, cfg) != b:
        raise ValueError(f"segment {seg.sid!r} spans multiple time periods")
    return STKey(
        shard=_fnv1a64(seg.sid.encode("utf-8")) % cfg.num_shards,
        bin=b,
        xz2=sequence_code(xz2_element(seg.mbr, cfg), cfg),
        sid=seg.sid,
    )


def spatial_scan_ranges(window: MBR, cfg: XzConfig) -> list[tuple[int, int]]:
    """Half-open code intervals covering every cell reachable from a window.

    A cell is reachable when its doubled extension intersects the window, so
    scanning these intervals returns a superset of the stored segments whose
    box intersects the window; callers refine with the exact box test.
    Adjacent and overlapping intervals are coalesced.
    """
    wx0, wy0, wx1, wy1 = _normalize(window, cfg.world)
    wx0, wy0 = max(wx0, 0.0), max(wy0, 0.0)
    wx1, wy1 = min(wx1, 1.0), min(wy1, 1.0)
    if wx0 > wx1 or wy0 > wy1:
        return []

    g = cfg.resolution
    out: list[tuple[int, int]] = []

    def visit(code: int, depth: int, cx: float, cy: float, side: float) -> None:
        ext = 2.0 * side
        if cx > wx1 or cy > wy1 or cx + ext < wx0 or cy + ext < wy0:
            return  # doubled cell misses the window: whole subtree is out of reach
        if wx0 <= cx and wy0 <= cy and cx + side <= wx1 and cy + side <= wy1:
            out.append((code, code + subtree_size(depth, g)))
            return  # window covers the cell: take the whole subtree
        out.append((code, code + 1))
        if depth == g:
            return
        half = side / 2.0
        child_sub = subtree_size(depth + 1, g)
        for digit in range(4):
            visit(
                code + digit * child_sub + 1,
                depth + 1,
                cx + (digit & 1) * half,
                cy + (digit >> 1) * half,
                half,
            )

    visit(0, 0, 0.0, 0.0, 1.0)

    merged: list[tuple[int, int]] = []
    for lo, hi in out:  # pre-order emission: lows already ascend
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def st_scan_ranges(window: MBR, tr: TimeRange, cfg: XzConfig) -> list[ScanRange]:
    """Key scan ranges for a window and time range, across shards and periods.

    Includes one period before the range's start: segments are keyed by the
    period of their start time, and a span may reach into the next period.
    """
    spatial = spatial_scan_ranges(window, cfg)
    if not spatial or tr.end < cfg.epoch:
        return []
    first = max(0, bin_of(max(tr.start, cfg.epoch), cfg) - 1)
    last = bin_of(tr.end, cfg)
    ranges = [
        ScanRange(
            low=struct.pack(">BIQ", shard, b, lo),
            high=struct.pack(">BIQ", shard, b, hi),
        )
        for shard in range(cfg.num_shards)
        for b in range(first, last + 1)
        for lo, hi in spatial
    ]
    ranges.sort(key=lambda r: r.low)
    return ranges
