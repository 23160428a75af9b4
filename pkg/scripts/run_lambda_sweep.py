"""Bias and ARU-distance heatmaps over one market's composition.

Varies the {x, a0} market's composition triple over the simplex grid
while the other two markets stay at (0.8, 0.1, 0.1), with utilities
(x, y, z, w) = (2, 1, 3, 0).  Writes the grid table as CSV and one SVG
heatmap per measure, with the menu-independent cell outlined.

Run:
    python scripts/run_lambda_sweep.py --out-dir out/ [--step 0.1]
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
    parser.add_argument("--step", type=float, default=0.1)
    args = parser.parse_args()

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = sweep(SweepConfig(mode="lambda", lambda_step=args.step))
    csv_path = out / "lambda_sweep.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("lam_z,lam_w,lam_zw,bias,squared_distance\n")
        for r in rows:
            values = [v for _, v in r.point] + [r.bias, r.squared_distance]
            fh.write(",".join(f"{v:.9g}" for v in values) + "\n")

    points = [(dict(r.point)["lam_z"], dict(r.point)["lam_w"]) for r in rows]
    for measure, signed in (("bias", True), ("squared_distance", False)):
        values = [getattr(r, measure if measure == "bias" else "squared_distance") for r in rows]
        svg = heatmap_svg(
            points,
            values,
            "lam_z of the {x, a0} market",
            "lam_w of the {x, a0} market",
            f"{measure} across compositions of the x market",
            highlight=(0.8, 0.1),
            signed=signed,
        )
        (out / f"lambda_sweep_{measure}.svg").write_text(svg)
    print(f"wrote {csv_path} and two SVG heatmaps ({len(rows)} grid cells)")


if __name__ == "__main__":
    main()
