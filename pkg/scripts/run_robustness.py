"""Concave energy value: nonlinear optimum against linearized contracts."""

import argparse
import os

from drcontract import config as cfg
from drcontract import experiments as ex
from drcontract import hjb_pde as hp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--out", default="results")
    ap.add_argument("--k1", default="0.5,1,2,4,8")
    ap.add_argument("--grid", default="161,400")
    ap.add_argument("--reservation", action="store_true",
                    help="hold the consumer at the no-contract value under the concave f instead of L0")
    args = ap.parse_args()
    params = cfg.load_config(args.config) if args.config else cfg.load_default()
    nx, nt = (int(v) for v in args.grid.split(","))
    k1 = [float(v) for v in args.k1.split(",")]
    rows = ex.robustness_study(params, k1, grid=hp.default_grid(params, nx, nt),
                              l0="reservation" if args.reservation else None)
    header = list(rows[0])
    cfg.write_csv(os.path.join(args.out, "robustness.csv"), header, [[r[k] for k in header] for r in rows])
    for r in rows:
        print(f"N={r['usages']} k1={r['k1']:5.2f}  nonlinear {r['benefit_nonlinear']:7.3f}  "
              f"linear {r['benefit_linear_sb']:7.3f}  vol {1e3 * r['vol_linear_sb']:6.2f} W "
              f"(none {1e3 * r['vol_none']:6.2f} W)")


if __name__ == "__main__":
    main()
