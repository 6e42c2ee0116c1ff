"""Render every recognized simulator output in a results directory.

    plots <results-dir>

Writes one PNG per recognized experiment next to its CSV. Exits 0 when
everything rendered, 1 when any recognized table failed (missing column,
empty grid), 2 when the directory holds nothing recognizable.
"""

from __future__ import annotations

import argparse
import sys

from .figures import EmptyTableError, MissingColumnError, recognized_outputs, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Regenerate figures from rpnvsim CSV results.")
    parser.add_argument("results_dir", help="directory holding the experiment CSVs")
    args = parser.parse_args(argv)

    specs = recognized_outputs(args.results_dir)
    if not specs:
        print(f"no recognized experiment outputs in {args.results_dir}",
              file=sys.stderr)
        return 2
    failures = 0
    for spec in specs:
        try:
            path = render(spec)
        except (MissingColumnError, EmptyTableError, OSError) as exc:
            print(f"error rendering {spec.experiment}: {exc}", file=sys.stderr)
            failures += 1
            continue
        print(path)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
