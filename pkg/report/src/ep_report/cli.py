"""ep-report: render figures and an HTML index from a persisted run or
sweep directory."""

from __future__ import annotations

import argparse
import sys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ep-report",
        description="Render static figures and an HTML index from the CSV "
                    "outputs of a run, sweep or verification directory.")
    parser.add_argument("--run", required=True, help="run or sweep directory")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--figures", default=None,
                        help="comma-separated figure names (default: all "
                             "with available inputs)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    from .figures import ReportSpec, render

    figures = None
    if args.figures:
        figures = tuple(tok.strip() for tok in args.figures.split(",") if tok.strip())
    try:
        records, warnings = render(ReportSpec(run_dir=args.run, out_dir=args.out,
                                              figures=figures))
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for rec in records:
        print(f"rendered {rec.filename}")
    for w in warnings:
        print(f"warning: {w}")
    print(f"index written to {args.out}/index.html")
    return 0


if __name__ == "__main__":
    sys.exit(main())
