"""Second-best effort costs versus the responsiveness cost scale lambda."""

import argparse
import os

from drcontract import calibration as cal
from drcontract import config as cfg


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--out", default="results")
    ap.add_argument("--n", type=int, default=200)
    args = ap.parse_args()
    params = cfg.load_config(args.config) if args.config else cfg.load_default()
    res = cal.lambda_sweep(params, cal.lambda_log_grid(n=args.n))
    keys = ("lambda", "cost_c1", "cost_c2", "total_cost", "producer_ce", "avg_volatility")
    cfg.write_csv(os.path.join(args.out, "lambda_sweep.csv"), keys, zip(*(res[k] for k in keys)))
    print(f"lambda* (volatility-effort cost peak) = {res['lambda_star']:.4g}")
    print(f"total-cost argmax                     = {res['lambda_total_argmax']:.4g}")
    print(f"activation threshold                  = {res['activation_threshold']:.4g}")
    b, v = res["producer_ce"], res["avg_volatility"]
    print(f"at lambda = {res['lambda'][-1]:g}: benefit {100 * (b[-1] / b[0] - 1):+.1f}%, "
          f"volatility {100 * (v[-1] / v[0] - 1):+.1f}% relative to the smallest lambda")


if __name__ == "__main__":
    main()
