"""Comparison table at the nominal calibration, printed and written to JSON."""

import argparse
import os

from drcontract import config as cfg
from drcontract import experiments as ex


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    params = cfg.load_config(args.config) if args.config else cfg.load_default()
    tab = ex.table2(params)
    keys = ("cost_c1", "cost_c2", "total_cost", "producer_benefit", "mean_reduction_W", "avg_volatility_W")
    print(f"{'':20s}" + "".join(f"{r:>18s}" for r in tab["columns"]))
    for k in keys:
        cells = "".join(f"{tab['columns'][r][k]:10.3f} ({tab['reference'][r][k]:5.2f})" for r in tab["columns"])
        print(f"{k:20s}{cells}")
    for name, chk in tab["checks"].items():
        print(f"  {name:28s} {chk['value']:10.4f} vs {chk['reference']:8.3f}  {'ok' if chk['ok'] else 'OFF'}")
    o = tab["fb_cost_c1_oracle"]
    print(f"first-best drift cost {o['value']:.4f}, analytic {o['oracle']:.4f}, table {o['reference']}")
    print(f"information rent {tab['information_rent']:.4f}")
    cfg.write_json(os.path.join(args.out, "table2.json"), tab)


if __name__ == "__main__":
    main()
