"""Bias and ARU-distance heatmaps over the outside alternatives' utilities.

Sweeps u(z) and u(w) over a square grid with u(x) = 2, u(y) = 1 fixed
and market compositions pinned to the menu-dependent benchmark
(grand and x markets at (0.8, 0.1, 0.1), y market at (0.1, 0.8, 0.1)).
Bias is largest where the outside alternatives straddle the inside ones
(overlapping preferences); the distance heatmap shrinks along the
u(z) = u(w) diagonal.

Run:
    python scripts/run_utility_sweep.py --out-dir out/ [--step 0.5]
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from aggchoice.render import heatmap_svg
from aggchoice.simulation import SweepConfig, sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out")
    parser.add_argument("--step", type=float, default=0.5)
    parser.add_argument("--low", type=float, default=-5.0)
    parser.add_argument("--high", type=float, default=5.0)
    args = parser.parse_args()

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    config = SweepConfig(
        mode="utility",
        utility_low=args.low,
        utility_high=args.high,
        utility_step=args.step,
        fixed_triples={
            frozenset({"x", "y", "a0"}): (0.8, 0.1, 0.1),
            frozenset({"x", "a0"}): (0.8, 0.1, 0.1),
            frozenset({"y", "a0"}): (0.1, 0.8, 0.1),
        },
    )
    rows = sweep(config)
    csv_path = out / "utility_sweep.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("u_z,u_w,bias,squared_distance\n")
        for r in rows:
            values = [v for _, v in r.point] + [r.bias, r.squared_distance]
            fh.write(",".join(f"{v:.9g}" for v in values) + "\n")

    points = [(dict(r.point)["u_z"], dict(r.point)["u_w"]) for r in rows]
    for measure, signed in (("bias", True), ("squared_distance", False)):
        values = [
            r.bias if measure == "bias" else r.squared_distance for r in rows
        ]
        svg = heatmap_svg(
            points,
            values,
            "u(z)",
            "u(w)",
            f"{measure} across outside-alternative utilities",
            signed=signed,
        )
        (out / f"utility_sweep_{measure}.svg").write_text(svg)
    print(f"wrote {csv_path} and two SVG heatmaps ({len(rows)} grid cells)")


if __name__ == "__main__":
    main()
