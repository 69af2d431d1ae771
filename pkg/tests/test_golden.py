"""Byte-stability of the curve codes and row keys against pinned vectors.

The TSV files under testdata/ were recorded from this implementation after
its code assignment was verified exhaustively against pre-order enumeration
(see test_xz). Any change that shifts codes or key bytes must fail here.
"""

import os

from crowdtrace import Location, Segment, XzConfig, XzElement, encode_key, sequence_code

TESTDATA = os.path.join(os.path.dirname(__file__), "..", "testdata")

GOLDEN_CFG = XzConfig(resolution=15, period_len=86_400, num_shards=4)


def golden_elements() -> list[tuple[int, str]]:
    """(resolution, digit string) pairs pinned in xz_golden.tsv."""
    cases = []
    for g in (1, 2, 3, 4, 6, 8, 15, 31):
        cases.append((g, ""))
        cases.append((g, "0"))
        cases.append((g, "3"))
        for digits in ("210", "123", "333", "0123", "30103"):
            if len(digits) <= g:
                cases.append((g, digits))
    cases.append((15, "210302103021030"))
    cases.append((31, "0123012301230123012301230123012"))
    return cases


def golden_segments() -> list[Segment]:
    """16 fixed segments pinned in key_golden.tsv."""
    out = []
    for i in range(16):
        lon = -170.0 + 20.0 * i
        lat = -80.0 + 10.0 * i
        t0 = 1000 + 50_000 * i
        locs = (
            Location(lon, lat, t0),
            Location(min(lon + 0.001, 180.0), min(lat + 0.0005, 90.0), t0 + 60),
        )
        out.append(Segment.build(f"g{i:02d}#0", f"g{i:02d}", locs))
    return out


def test_sequence_codes_match_golden_file():
    with open(os.path.join(TESTDATA, "xz_golden.tsv"), "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    assert len(lines) == len(golden_elements())
    for (g, digits), (g_file, digits_file, code_file) in zip(golden_elements(), lines):
        assert (str(g), digits) == (g_file, digits_file)
        element = XzElement(tuple(int(c) for c in digits))
        assert sequence_code(element, XzConfig(resolution=g)) == int(code_file)


def test_row_keys_match_golden_file():
    with open(os.path.join(TESTDATA, "key_golden.tsv"), "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    segments = golden_segments()
    assert len(lines) == len(segments)
    for seg, (sid_file, hex_file) in zip(segments, lines):
        assert seg.sid == sid_file
        assert encode_key(seg, GOLDEN_CFG).packed().hex() == hex_file
