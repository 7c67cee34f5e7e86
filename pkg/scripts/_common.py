import argparse
import sys
from pathlib import Path

from rhsradar import bench


def figure_main(name: str, describe) -> int:
    p = argparse.ArgumentParser(description=f"run the {name} preset and print its curves")
    p.add_argument("--out", default=f"results/{name}", help="output directory (resumable)")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    spec = bench.preset(name, trials=args.trials, seed=args.seed)
    runner = {"fig2a": bench.run_fig2a, "fig2b": bench.run_fig2b, "fig2c": bench.run_fig2c}[name]
    res = runner(spec, out_dir=Path(args.out), workers=args.workers,
                 progress=lambda rows: print(".", end="", flush=True, file=sys.stderr))
    print(file=sys.stderr)
    describe(res)
    print(f"wrote {args.out}/summary.csv (spec {res.spec_hash})")
    return 1 if res.failures else 0


def show(label, values, db):
    cells = "  ".join(f"{v:g}: {d:7.2f}" for v, d in zip(values, db))
    print(f"{label:>14}  {cells}")
