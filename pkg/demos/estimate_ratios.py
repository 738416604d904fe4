"""
Estimate ratios on a small grid
===============================

Each check returns the left-hand side, the right-hand side and their ratio
per input; bounded ratios across a family are the numerical content of an
estimate.
"""
from dzk.estimates import check_maximal, check_smoothing, check_strichartz
from dzk.families import InputFamily
from dzk.field import make_grid

grid = make_grid(32, 32, 32, 16.0, 16.0, 16.0)
family = InputFamily("random-bandlimited", count=5, seed=1)

for report in (
    check_strichartz(4, 4, family, grid, T=1.0, nt=9),
    check_smoothing("hom", family, grid, T=1.0, nt=9),
    check_maximal(2.0, family, grid, T=1.0, nt=9),
):
    print(f"{report.case:16s} max={report.max_ratio:.4f} median={report.median_ratio:.4f} "
          f"spread={report.spread:.3f}")

# one row per input, as written to the case CSV
for row in report.rows()[:2]:
    print(row)
