"""Mean value of (h R)^2 against the predicted constant for one imaginary and one real family."""

import argparse
import json
from pathlib import Path

from quadmoment.experiments import mean_square_run
from quadmoment.localdata import parse_stuple
from quadmoment.quadfields import HRCache


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--imag", default="inf=C;3=rm")
    ap.add_argument("--real", default="inf=R;3=rm;5=rm")
    ap.add_argument("--imag-X", default="10000,100000,1000000,10000000")
    ap.add_argument("--real-X", default="10000,100000")
    ap.add_argument("--out", default="results")
    ap.add_argument("--cache", default=None)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cache = HRCache(args.cache) if args.cache else None
    summary = {}
    for tag, text, xs in (("imag", args.imag, args.imag_X), ("real", args.real, args.real_X)):
        rep = mean_square_run(parse_stuple(text), [int(x) for x in xs.split(",")], cache)
        (out / f"mean_{tag}.csv").write_text(rep.to_csv())
        summary[tag] = rep.to_dict()
        print(f"{text}  prediction {rep.prediction.value:.10g}")
        print(rep.to_csv(), end="")
    if cache is not None:
        cache.save()
    (out / "mean.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
