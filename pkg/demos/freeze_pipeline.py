"""Fit freeze-out temperatures to the packaged illustrative records.

The records and the schedule that ship with the package are synthetic;
this shows the mechanics, not device results.

    python demos/freeze_pipeline.py [num_samples]
"""

import math
import sys

from domainwall import (
    ScheduleTable,
    ThermalModel,
    chain_strength_heuristic,
    fit_temperature,
    load_records,
    rescale_and_extract,
)
from domainwall.errors import BracketError
from domainwall.freeze import _data_path


def main(n=2 * 10**5):
    schedule = ScheduleTable.packaged()
    print(" m  scheme        T_qubo    T_coup   B_GHz    s_freeze")
    for rec in load_records(_data_path("records_illustrative.csv")):
        model = ThermalModel.for_assignment(rec.m, rec.scheme, num_samples=n)
        cs = rec.chain_strength or chain_strength_heuristic(model.q)
        try:
            est = fit_temperature(rec, model)
        except BracketError as exc:
            print(f"{rec.m:2d}  {rec.scheme:12s}  {exc}")
            continue
        out = rescale_and_extract(est, cs, schedule, strict=False)
        if out.T_qubo is None:
            print(f"{rec.m:2d}  {rec.scheme:12s}  no feasible sample; T_qubo > {out.ci_low['T_qubo']:.4f}")
            continue
        s = "off table" if out.s_freeze is None else f"{out.s_freeze:.3f}"
        B = out.B_freeze if math.isfinite(out.B_freeze) else float("nan")
        print(f"{rec.m:2d}  {rec.scheme:12s}  {out.T_qubo:.5f}  {out.T_coup:.5f}  {B:7.2f}  {s}")


if __name__ == "__main__":
    main(int(float(sys.argv[1])) if len(sys.argv) > 1 else 2 * 10**5)
