"""Write the CSV data behind every figure recipe into one directory.

Usage: python3 scripts/reproduce_figures.py [out_dir] [--points N]
"""

import argparse
import time

from mapqkd import harness


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", nargs="?", default="figures")
    parser.add_argument("--points", type=int, default=harness.DEFAULT_POINTS)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()
    for figure_id in harness.FIGURE_IDS:
        start = time.perf_counter()
        tables = harness.run_figure(figure_id, args.out_dir, args.jobs, args.points)
        print(f"{figure_id}: {len(tables)} curves in {time.perf_counter() - start:.1f} s")


if __name__ == "__main__":
    main()
