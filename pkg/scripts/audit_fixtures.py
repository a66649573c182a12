#!/usr/bin/env python3
"""Write the bundled example oracle files and audit them through the
CLI, showing the witness output for the non-submodular fixtures.

    python scripts/audit_fixtures.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from salb import cli
from salb.interp import SampleCollection, samples_to_json
from salb.metric import FacilityInstance, facility_to_json, metric_to_json, validate_metric
from salb.setfn import GroundSet


def main() -> int:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
    out.mkdir(parents=True, exist_ok=True)

    tree_drop = validate_metric(
        [[0, 5, 3, 5], [5, 0, 3, 5], [3, 3, 0, 3], [5, 5, 3, 0]]
    )
    far_point = validate_metric(
        [[0, 5, 3, 3], [5, 0, 3, 3], [3, 3, 0, 6], [3, 3, 6, 0]]
    )
    facility = FacilityInstance((1.0, 1.0), np.array([[1.0, 3.0], [1.0, 1.5], [2.0, 1.0]]))
    gs = GroundSet(3)
    quad = SampleCollection(
        gs, tuple((mask, float((7 - mask.bit_count()) * mask.bit_count())) for mask in range(1, 7))
    )

    files = {
        "metric_tree_drop.json": metric_to_json(tree_drop),
        "metric_far_point.json": metric_to_json(far_point),
        "facility_two_sites.json": facility_to_json(facility),
        "samples_quadratic.json": samples_to_json(quad),
    }
    rc = 0
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        print(f"== {name}")
        rc |= cli.main(["audit", str(path)])
    return rc


if __name__ == "__main__":
    sys.exit(main())
