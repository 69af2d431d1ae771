"""How a segment's bounding box becomes one sortable integer, and how a
query window becomes a handful of key scans.

Every quadtree cell, at every depth, gets a number: its position in a
depth-first walk. A box is filed under the deepest cell that is at least as
big as the box and contains its min corner; the cell doubled in width and
height always covers the whole box, so a window scan that respects doubled
cells never misses anything. Subtrees are contiguous number ranges, which is
what makes window queries turn into a few byte-range scans.
"""

from crowdtrace import (
    MBR,
    Segment,
    Location,
    TimeRange,
    XzConfig,
    encode_key,
    sequence_code,
    spatial_scan_ranges,
    st_scan_ranges,
    xz2_element,
)

cfg = XzConfig(resolution=15)  # cells down to ~1 km

boxes = {
    "city block": MBR(116.390, 39.900, 116.396, 39.904),
    "city": MBR(116.0, 39.5, 117.0, 40.5),
    "continent": MBR(70.0, 10.0, 140.0, 55.0),
    "whole world": MBR(-180.0, -90.0, 180.0, 90.0),
}
print("box -> element depth and code")
for name, box in boxes.items():
    element = xz2_element(box, cfg)
    code = sequence_code(element, cfg)
    print(f"  {name:12s} depth {len(element.digits):2d}  code {code}")

# A stored segment gets shard byte | period | code | segment id, big-endian,
# so plain byte order walks the curve.
seg = Segment.build(
    "walker#0",
    "walker",
    [Location(116.391, 39.901, 1_600_000_000), Location(116.392, 39.902, 1_600_000_060)],
)
key = encode_key(seg, cfg)
print(f"\nrow key of {seg.sid}: shard={key.shard} period={key.bin} code={key.xz2}")
print(f"  bytes: {key.packed().hex()}")

# Planning a window query: a few code intervals instead of one huge scan.
window = MBR(116.38, 39.89, 116.41, 39.92)
intervals = spatial_scan_ranges(window, cfg)
total = cfg.total_elements()
covered = sum(hi - lo for lo, hi in intervals)
print(f"\n~3 km window -> {len(intervals)} code intervals")
print(f"  covering {covered} of {total} cells ({100 * covered / total:.5f}%)")

ranges = st_scan_ranges(window, TimeRange(1_600_000_000, 1_600_040_000), cfg)
print(f"  with one day-length period plus its predecessor: {len(ranges)} key ranges")
print(f"  first: [{ranges[0].low.hex()}, {ranges[0].high.hex()})")
