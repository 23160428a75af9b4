"""Extremal-bias table across grand-menu compositions.

For each composition triple of the {x, y, a0} menu, optimizes the bias
over all compositions of the two binary markets and reports four
series: most positive bias, most negative bias, smallest absolute bias,
and the bias at the menu-independent point.  With the default utilities
the extremes exceed +2 and fall below -3: large enough to flip the
estimated ranking of x and y.

Run:
    python scripts/run_minmax_bias.py --out-dir out/ [--step 0.1]
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from aggchoice.render import heatmap_svg
from aggchoice.simulation import minmax_bias


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out")
    parser.add_argument("--step", type=float, default=0.1)
    args = parser.parse_args()

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = minmax_bias(outer_step=args.step, inner_step=args.step)
    csv_path = out / "minmax_bias.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("lam_w,lam_z,max_bias,min_bias,min_abs_bias,independent_bias\n")
        for r in rows:
            fh.write(
                ",".join(
                    f"{v:.9g}"
                    for v in (
                        r.lam_w,
                        r.lam_z,
                        r.max_bias,
                        r.min_bias,
                        r.min_abs_bias,
                        r.independent_bias,
                    )
                )
                + "\n"
            )

    points = [(r.lam_w, r.lam_z) for r in rows]
    svg = heatmap_svg(
        points,
        [r.independent_bias for r in rows],
        "lam_w of the grand menu",
        "lam_z of the grand menu",
        "bias at the menu-independent point",
        signed=True,
    )
    (out / "minmax_independent_bias.svg").write_text(svg)
    print(
        f"wrote {csv_path}; extremes: max {max(r.max_bias for r in rows):+.3f}, "
        f"min {min(r.min_bias for r in rows):+.3f}"
    )


if __name__ == "__main__":
    main()
