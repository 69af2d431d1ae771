"""From raw GPS points to storable segments.

A trajectory arrives as a time-sorted point stream. Two things happen before
storage: implausible jumps are dropped (GPS glitches imply impossible
speeds), and the remaining points are cut into "stay point" segments, maximal
runs where every pair of points is within 200 m and 30 minutes of each other.
Segments are what the store indexes, and their dwell time later weights the
contact score.
"""

from crowdtrace import Location, SegmentationConfig, Trajectory, filter_noise, segment

cfg = SegmentationConfig()  # 200 m, 1800 s, 50 m/s

# A morning outing: coffee, a walk to the park, lunch across town.
# One point is a GPS glitch teleporting 10 km away for a single fix.
points = []
t = 1_600_000_000
for minute in range(12):  # coffee: 12 minutes around one corner
    points.append(Location(116.3900 + 0.00002 * (minute % 3), 39.9000, t))
    t += 60
points.append(Location(116.4900, 39.9500, t + 5))  # the glitch
for minute in range(1, 9):  # park bench, 900 m north-east
    points.append(Location(116.3980, 39.9070 + 0.00001 * minute, t + 60 * minute))
t += 60 * 9 + 45 * 60  # 45 minutes off the grid
for minute in range(10):  # lunch, 3 km east
    points.append(Location(116.4330, 39.9065, t + 60 * minute))

traj = Trajectory("morning", points)
print(f"raw points:      {len(traj.locations)}")

clean = filter_noise(traj, cfg)
print(f"after the gate:  {len(clean.locations)}  (the 10 km fix implied >100 m/s)")

segments = segment(clean, cfg)
print(f"segments:        {len(segments)}")
for s in segments:
    minutes = (s.et - s.st) / 60
    print(
        f"  {s.sid}: {len(s.locations):2d} points, {minutes:4.1f} min dwell, "
        f"box {s.mbr.max_lon - s.mbr.min_lon:.5f} x {s.mbr.max_lat - s.mbr.min_lat:.5f} deg"
    )

# The partition property: concatenating segments gives back the clean stream.
flat = [loc for s in segments for loc in s.locations]
assert flat == list(clean.locations)
print("partition check: segments reassemble the filtered trajectory exactly")
