"""
Reports from the command line
=============================

The ``carleman`` command runs the same checks and writes CSV or JSON.  Here it
is driven in-process; the shell equivalent is shown in each comment.
"""

# %%
import tempfile
from pathlib import Path

from carleman.cli import main

out = Path(tempfile.mkdtemp())

# carleman weights gevrey:1 --depth 5
main(["weights", "gevrey:1", "--depth", "5"])

# carleman coeff --construction thm1 --x 1/2 --j 3
main(["coeff", "--construction", "thm1", "--x", "1/2", "--j", "3"])

# %%
# carleman verify --suite prop41 --jmax 20 --out <dir>/prop41.csv
code = main(["verify", "--suite", "prop41", "--jmax", "20", "--out", str(out / "prop41.csv")])
print("exit", code)
print((out / "prop41.csv").read_text().splitlines()[:4])

# %%
# carleman report --suites sdistance,cj --out <dir>/reports
code = main(["report", "--suites", "sdistance,cj", "--out", str(out / "reports")])
print("exit", code, sorted(p.name for p in (out / "reports").iterdir()))
