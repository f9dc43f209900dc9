"""Exact local densities from orbit counts, stabilizer congruences and the majorant series."""

import argparse
import csv
import json
from pathlib import Path

from quadmoment.orbitcount import majorant_series
from quadmoment.orbitcount.orbit import (
    CSV_HEADER,
    epsilon_from_orbit,
    stabilizer_congruence_count,
    stabilizer_params,
)

RUNS = [(p, 1, c) for p in (3, 5) for c in ("ur-sp", "ur-ur", "rm-ur")] + [(3, 2, "ur-rm"), (3, 2, "rm-rm")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--skip-n2", action="store_true", help="skip the p^2 orbits (about 25 s)")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "orbits.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for p, n, cls in RUNS:
            if n > 1 and args.skip_n2:
                continue
            rep = epsilon_from_orbit(p, cls, n=n)
            w.writerow(rep.csv_row())
            print(f"p={p} n={n} {cls}: orbit {rep.orbit_size}, volume {rep.volume}, factor {rep.relation_factor}")

    stab = {}
    for p, delta in ((3, 1), (5, 1), (7, 1), (2, 2), (2, 3)):
        a1, a2, n = stabilizer_params(p, delta)
        stab[f"{p},{delta}"] = stabilizer_congruence_count(p, n, a1, a2)
        print(f"stabilizer p={p} delta={delta}: {stab[f'{p},{delta}']} (2 q^delta = {2 * p**delta})")
    maj = {q: majorant_series(q, 64) for q in (2, 3, 5)}
    (out / "local.json").write_text(json.dumps({"stabilizers": stab, "majorant": maj}, indent=2))


if __name__ == "__main__":
    main()
