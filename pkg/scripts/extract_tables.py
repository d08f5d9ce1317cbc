"""Scratch: pull the two annual parameter tables out of paper.md into
the bundled reference CSV. Not part of the package."""

import re

SRC = "/root/pkg/paper.md"
DST = "/root/pkg/src/kappa_income/data/uk_reference_fits.csv"

ROW = re.compile(
    r"^\s*(\d{4})\s*&\s*([\d.]+)\s*&\s*([\d.]+)\s*&\s*([\d.]+)\s*&\s*([\d.]+)"
    r"\s*&\s*\\\(\s*([\d.]+)\s*\\times\s*10\^\{(-\d+)\}\s*\\\)"
)

rows = []
with open(SRC) as fh:
    text = fh.readlines()
for line in text:
    m = ROW.match(line)
    if m:
        year = int(m.group(1))
        xm, delta, kappa, alpha = (m.group(i) for i in range(2, 6))
        beta = f"{m.group(6)}e{m.group(7)}"
        rows.append((year, xm, delta, kappa, alpha, beta))

assert len(rows) == 46, len(rows)
# First 23 rows are the pre-tax table, next 23 the post-tax table.
with open(DST, "w") as fh:
    fh.write("year,basis,x_m,delta,kappa,alpha,beta\n")
    for idx, (year, xm, delta, kappa, alpha, beta) in enumerate(rows):
        basis = "pre" if idx < 23 else "post"
        fh.write(f"{year},{basis},{xm},{delta},{kappa},{alpha},{beta}\n")

print(f"wrote {len(rows)} rows")
for idx in (0, 22, 23, 34, 45):
    print(rows[idx])
