"""T0 for every speed model, with full data and with two observed sides."""
import argparse

from tatrecon import Grid2D, SpeedModel, critical_time, eval_speed, fast_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=301)
    args = ap.parse_args()
    grid = Grid2D.square(args.nx)
    print(f"{'speed':<6} {'all':>8} {'NW':>8}")
    for kind in ("c1", "c2", "c3", "c4", "c5"):
        c = eval_speed(SpeedModel(kind), grid)
        print(f"{kind:<6} {critical_time(fast_sweep(c, 'all')):>8.4f} {critical_time(fast_sweep(c, 'NW')):>8.4f}")


if __name__ == "__main__":
    main()
