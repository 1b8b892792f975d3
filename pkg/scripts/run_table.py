"""Run the scenario configs and print the TR vs NS error table.

    python scripts/run_table.py                    # every config in scripts/configs, 301 x 301
    python scripts/run_table.py --nx 201 --jobs 4  # desk scale, four runs at a time
    python scripts/run_table.py sl_c1_4T0 zebra_NW
"""
import argparse
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from tatrecon.config import RunConfig
from tatrecon.pipeline import error_table, run_experiment

HERE = Path(__file__).resolve().parent


def one(path, nx, out):
    raw = json.loads(Path(path).read_text())
    raw.setdefault("name", Path(path).stem)
    if nx:
        raw["nx"] = nx
    cfg = RunConfig.from_dict(raw)
    return run_experiment(cfg, None if out is None else Path(out) / cfg.name)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", help="config stems (default: all)")
    ap.add_argument("--nx", type=int, default=None, help="override the grid size")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None, help="write artifacts under this directory")
    args = ap.parse_args()
    paths = sorted((HERE / "configs").glob("*.json"))
    if args.names:
        paths = [HERE / "configs" / f"{n}.json" for n in args.names]
    n = len(paths)
    with ProcessPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(one, paths, [args.nx] * n, [args.out] * n))
    table = error_table(reports)
    print(table)
    if args.out:
        (Path(args.out) / "table.txt").write_text(table + "\n")


if __name__ == "__main__":
    main()
