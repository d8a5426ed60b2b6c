#!/usr/bin/env python3
"""Generate the bundled minimal-basis integral files.

Writes one deterministic text file per molecular geometry, so regeneration
is idempotent and the files can be committed alongside the code. Distances
are in angstrom and become part of the file name.
"""

import argparse
import sys
from pathlib import Path

from hevqe.integrals import beh2, h2, lih, write_integral_file

H2_GRID = (0.30, 0.45, 0.60, 0.735, 0.90, 1.05, 1.20, 1.50, 1.80, 2.10, 2.40, 2.70)
LIH_GRID = (1.595,)
BEH2_GRID = (1.326,)


def geometry_table():
    rows = [(f"h2_{d:.3f}", h2(d)) for d in H2_GRID]
    rows += [(f"lih_{d:.3f}", lih(d)) for d in LIH_GRID]
    rows += [(f"beh2_{d:.3f}", beh2(d)) for d in BEH2_GRID]
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data/integrals", help="output directory")
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for stem, molecule in geometry_table():
        path = out / f"{stem}.fcidump"
        write_integral_file(path, molecule)
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
