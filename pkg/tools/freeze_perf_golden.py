"""Regenerate tests/golden/perf_default.json.

The model's output is only frozen after a plain-arithmetic recomputation
from the literal unit constants agrees with it to 1e-12 relative.
"""

import json
import math
import sys
from pathlib import Path

from talu import perf

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden" / "perf_default.json"


def hand_ratios():
    # TALU-V: 128 lanes at 2 GHz, 1.81 mW each; P(8,2) mul 19 / add 23 cycles,
    # 27 muls and 18 adds per 3x3 kernel, mul and add streams overlapped.
    talu_kps = 128 * 2e9 / max(27 * 19, 18 * 23)
    talu_kpj = talu_kps / (128 * 1.81e-3)
    # UMAC-V: 6 units at 667 MHz, 4 8-bit MACs per cycle each, 99 mW each.
    umac_kps = 6 * 4 * 667e6 / 27
    umac_kpj = umac_kps / (6 * 99e-3)
    return {
        "throughput_ratio": talu_kps / umac_kps,
        "energy_efficiency_ratio": talu_kpj / umac_kpj,
        "area_ratio": (128 * 0.0026) / (6 * 0.0515),
    }


def main(argv=None):
    report = perf.equi_area_report(perf.load_config())
    hand = hand_ratios()
    for key, want in hand.items():
        got = getattr(report, key)
        if not math.isclose(got, want, rel_tol=1e-12):
            print(f"refusing to freeze: {key} model {got!r} vs hand {want!r}", file=sys.stderr)
            return 1
    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN.write_text(perf.report_json(report))
    print(f"wrote {GOLDEN}")
    print(json.dumps(hand, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
