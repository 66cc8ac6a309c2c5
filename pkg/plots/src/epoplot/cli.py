"""Batch figure regeneration: `epoplot scenario RUN_DIR [...]` renders the
solution/entropy panels into each run directory; `epoplot convergence FILE`
renders the log-log order plot next to the table."""

import argparse
import sys

from .figures import PlotInputError, plot_convergence, plot_scenario


def main(argv=None):
    parser = argparse.ArgumentParser(prog="epoplot")
    subs = parser.add_subparsers(dest="command", required=True)
    p_sc = subs.add_parser("scenario", help="render run-directory figures")
    p_sc.add_argument("run_dirs", nargs="+")
    p_sc.add_argument("--ext", default="svg", choices=("svg", "pdf", "png"))
    p_cv = subs.add_parser("convergence", help="render an order plot")
    p_cv.add_argument("csv_path")
    p_cv.add_argument("--out")
    p_cv.add_argument("--ext", default="svg", choices=("svg", "pdf", "png"))
    args = parser.parse_args(argv)
    try:
        if args.command == "scenario":
            for run_dir in args.run_dirs:
                print(plot_scenario(run_dir, ext=args.ext))
        else:
            print(plot_convergence(args.csv_path, out_path=args.out,
                                   ext=args.ext))
        return 0
    except PlotInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
