"""Visible-direction fraction over Omega for a speed, observed sides and time T.

    python scripts/visibility_map.py --speed c1 --sides NW --T 4.7 --out vis_NW.pgm

Values below 1 mark points carrying singularities that no observed ray reaches
within T; for two observed sides these fill the triangle next to the silent corner.
"""
import argparse

import numpy as np

from tatrecon import Cutoff, Grid2D, Region, SpeedModel, visibility_classify
from tatrecon import io


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--speed", default="c1")
    ap.add_argument("--sides", default="NW")
    ap.add_argument("--T", type=float, default=4.7)
    ap.add_argument("--nx", type=int, default=101)
    ap.add_argument("--stride", type=int, default=4, help="sample every stride-th node")
    ap.add_argument("--dirs", type=int, default=32)
    ap.add_argument("--out", default="visibility.pgm")
    args = ap.parse_args()

    grid = Grid2D.square(args.nx)
    vis = visibility_classify(Region.omega(grid).interior(), SpeedModel(args.speed), args.T,
                              n_dirs=args.dirs, cutoff=Cutoff.of(args.sides), stride=args.stride)
    pts, frac = vis.points, vis.fraction
    print(f"{len(pts)} points, {np.mean(frac < 1):.1%} with invisible directions, "
          f"min fraction {frac.min():.3f}")
    for name, sel in (("x > y", pts[:, 0] > pts[:, 1]), ("x < y", pts[:, 0] < pts[:, 1])):
        print(f"  {name}: mean visible fraction {frac[sel].mean():.3f}")
    io.write_pgm(args.out, vis.to_field(grid)[::args.stride, ::args.stride], 0.0, 1.0)
    print(f"map -> {args.out}")


if __name__ == "__main__":
    main()
