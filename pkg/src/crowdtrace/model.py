"""Trajectory data model: GPS points, noise filtering and stay-point segmentation.

A raw trajectory is an id plus a time-sorted list of (lon, lat, t) points.
Before storage it is split into segments: maximal runs of points in which
every pair of points is within ``d_seg`` meters and ``t_seg`` seconds of
each other. Segments are the unit of storage, indexing and scoring.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

EARTH_RADIUS_M = 6_371_008.8


class DegenerateTrajectoryError(ValueError):
    """Raised when a trajectory has no usable locations left."""


def haversine_m(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    """Great-circle distance in meters between two WGS84 points."""
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


@dataclass(frozen=True, slots=True)
class Location:
    """One timestamped GPS point. ``t`` is integer seconds since the Unix epoch."""

    lon: float
    lat: float
    t: int

    def __post_init__(self) -> None:
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"lon out of range: {self.lon}")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"lat out of range: {self.lat}")
        if self.t < 0:
            raise ValueError(f"negative timestamp: {self.t}")

    def distance_m(self, other: "Location") -> float:
        return haversine_m(self.lon, self.lat, other.lon, other.lat)


@dataclass(frozen=True, slots=True)
class MBR:
    """Minimum bounding rectangle in degrees, min <= max on both axes."""

    min_lon: float
    min_lat: float
    max_lon: float
    max_lat: float

    def __post_init__(self) -> None:
        if self.min_lon > self.max_lon or self.min_lat > self.max_lat:
            raise ValueError(f"inverted MBR: {self}")

    def intersects(self, other: "MBR") -> bool:
        return (
            self.min_lon <= other.max_lon
            and other.min_lon <= self.max_lon
            and self.min_lat <= other.max_lat
            and other.min_lat <= self.max_lat
        )

    def contains_point(self, lon: float, lat: float) -> bool:
        return self.min_lon <= lon <= self.max_lon and self.min_lat <= lat <= self.max_lat

    def contains(self, other: "MBR") -> bool:
        return (
            self.min_lon <= other.min_lon
            and self.min_lat <= other.min_lat
            and other.max_lon <= self.max_lon
            and other.max_lat <= self.max_lat
        )

    def union(self, other: "MBR") -> "MBR":
        return MBR(
            min(self.min_lon, other.min_lon),
            min(self.min_lat, other.min_lat),
            max(self.max_lon, other.max_lon),
            max(self.max_lat, other.max_lat),
        )


WORLD = MBR(-180.0, -90.0, 180.0, 90.0)


@dataclass(frozen=True, slots=True)
class TimeRange:
    """Closed time interval in integer seconds."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"inverted time range: {self}")

    def intersects(self, other: "TimeRange") -> bool:
        return self.start <= other.end and other.start <= self.end

    def union(self, other: "TimeRange") -> "TimeRange":
        return TimeRange(min(self.start, other.start), max(self.end, other.end))


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Time-ordered locations of one moving object."""

    id: str
    locations: tuple[Location, ...]

    def __init__(self, id: str, locations: Iterable[Location]):
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "locations", tuple(locations))
        if not self.id:
            raise ValueError("trajectory id must be non-empty")
        if not self.locations:
            raise DegenerateTrajectoryError(f"trajectory {id!r} has no locations")
        for a, b in zip(self.locations, self.locations[1:]):
            if b.t < a.t:
                raise ValueError(f"trajectory {id!r} not sorted by time")

    def __len__(self) -> int:
        return len(self.locations)


@dataclass(frozen=True, slots=True)
class Segment:
    """A stay-point-bounded sub-trajectory with cached bounds.

    ``sid`` is globally unique (trajectory id + '#' + ordinal); ``st``/``et``
    are the first/last timestamps and ``mbr`` the tight bounding box.
    """

    sid: str
    traj_id: str
    locations: tuple[Location, ...]
    mbr: MBR
    st: int
    et: int

    def __post_init__(self) -> None:
        if not self.locations:
            raise ValueError(f"segment {self.sid!r} has no locations")
        if self.st > self.et:
            raise ValueError(f"segment {self.sid!r} has st > et")

    @classmethod
    def build(cls, sid: str, traj_id: str, locations: Iterable[Location]) -> "Segment":
        locs = tuple(locations)
        return cls(
            sid=sid,
            traj_id=traj_id,
            locations=locs,
            mbr=mbr_of(locs),
            st=locs[0].t,
            et=locs[-1].t,
        )

    @property
    def time_range(self) -> TimeRange:
        return TimeRange(self.st, self.et)


@dataclass(frozen=True, slots=True)
class SegmentationConfig:
    """Thresholds for noise filtering and stay-point segmentation.

    ``d_seg``/``t_seg`` bound the spatial and temporal spread allowed between
    any two points of one segment; ``max_speed`` is the plausibility bound of
    the noise filter in m/s.
    """

    d_seg: float = 200.0
    t_seg: int = 1800
    max_speed: float = 50.0

    def __post_init__(self) -> None:
        if self.d_seg <= 0 or self.t_seg <= 0 or self.max_speed <= 0:
            raise ValueError("segmentation thresholds must be strictly positive")


def mbr_of(locations: Iterable[Location]) -> MBR:
    """Tight bounding box of a non-empty point list."""
    it = iter(locations)
    first = next(it)
    min_lon = max_lon = first.lon
    min_lat = max_lat = first.lat
    for loc in it:
        min_lon = min(min_lon, loc.lon)
        max_lon = max(max_lon, loc.lon)
        min_lat = min(min_lat, loc.lat)
        max_lat = max(max_lat, loc.lat)
    return MBR(min_lon, min_lat, max_lon, max_lat)


def time_range_of(locations: Iterable[Location]) -> TimeRange:
    """Tight time interval of a non-empty point list."""
    ts = [loc.t for loc in locations]
    return TimeRange(min(ts), max(ts))


def filter_noise(traj: Trajectory, cfg: SegmentationConfig) -> Trajectory:
    """Drop points whose implied speed from the last retained point is implausible.

    Greedy forward gate: the first point is always kept; each later point is
    kept only if reaching it from the previously kept point needs at most
    ``cfg.max_speed`` m/s. Zero time gaps with nonzero displacement count as
    infinite speed.
    """
    kept = [traj.locations[0]]
    for loc in traj.locations[1:]:
        prev = kept[-1]
        dt = loc.t - prev.t
        dist = prev.distance_m(loc)
        if dt > 0:
            ok = dist / dt <= cfg.max_speed
        else:
            ok = dist == 0.0
        if ok:
            kept.append(loc)
    return Trajectory(traj.id, kept)


def segment(traj: Trajectory, cfg: SegmentationConfig, max_span: int | None = None) -> list[Segment]:
    """Partition a trajectory into maximal segments under the pairwise bounds.

    Grows the current segment left to right and closes it when the next point
    would exceed ``d_seg`` against any point already in it, or ``t_seg``
    against its first point. ``max_span`` additionally force-closes a segment
    before its total time span would exceed that many seconds (used at ingest
    to keep segments inside one index period).

    The concatenation of the returned segments' locations is exactly the
    input sequence.
    """
    locs = traj.locations
    runs: list[tuple[Location, ...]] = []
    start = 0
    for i in range(1, len(locs)):
        cand = locs[i]
        gap = cand.t - locs[start].t
        ok = gap <= cfg.t_seg and (max_span is None or gap <= max_span)
        if ok:
            for j in range(start, i):
                if locs[j].distance_m(cand) > cfg.d_seg:
                    ok = False
                    break
        if not ok:
            runs.append(locs[start:i])
            start = i
    runs.append(locs[start:])
    return [
        Segment.build(f"{traj.id}#{k}", traj.id, run)
        for k, run in enumerate(runs)
    ]


# --- CSV input ---------------------------------------------------------------
#
# One point per line: traj_id,lon,lat,unix_seconds. Header line optional.
# Points of one trajectory are expected contiguous and time-sorted, but each
# trajectory is re-sorted defensively.


def load_trajectories_csv(source: str | TextIO) -> tuple[list[Trajectory], int]:
    """Parse a points CSV into trajectories.

    Returns (trajectories, number of skipped malformed lines). A leading
    header line is tolerated and not counted as malformed.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_trajectories_csv(fh)

    groups: dict[str, list[Location]] = {}
    skipped = 0
    for lineno, row in enumerate(csv.reader(source)):
        if not row:
            continue
        try:
            traj_id = row[0].strip()
            loc = Location(lon=float(row[1]), lat=float(row[2]), t=int(row[3]))
            if not traj_id:
                raise ValueError("empty traj_id")
        except (IndexError, ValueError):
            if lineno == 0:
                continue  # optional header
            skipped += 1
            continue
        groups.setdefault(traj_id, []).append(loc)

    trajectories = [
        Trajectory(tid, sorted(locs, key=lambda l: l.t)) for tid, locs in groups.items()
    ]
    return trajectories, skipped


def write_points_csv(trajectories: Iterable[Trajectory], dest: str | TextIO, header: bool = True) -> None:
    """Write trajectories in the ingest CSV format."""
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_points_csv(trajectories, fh, header=header)
            return
    writer = csv.writer(dest, lineterminator="\n")
    if header:
        writer.writerow(["traj_id", "lon", "lat", "unix_seconds"])
    for traj in trajectories:
        for loc in traj.locations:
            writer.writerow([traj.id, repr(loc.lon), repr(loc.lat), loc.t])
