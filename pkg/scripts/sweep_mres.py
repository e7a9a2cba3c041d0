"""AUC and accuracy against M_res for every residual variant.

Uses the separated two-class scenario from pilot_separation.py and writes a
plot-ready CSV (variant, M_res, AUC, accuracy, mean_round_ms).

    python scripts/sweep_mres.py --m-res 1 2 3 5 8 12 --out sweep.csv
"""
import argparse
import csv
import sys

from finder.evaluation import PipelineConfig, run_lpocv
from finder.synth import scenario_dataset

from pilot_separation import N_A, N_B, separated


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m-res", type=int, nargs="+", default=[1, 2, 3, 5, 8, 12])
    ap.add_argument("--variants", nargs="+", default=["direct", "mls", "aca-s", "aca-l"])
    ap.add_argument("--regime", default="unbalanced")
    ap.add_argument("--kernel", default="rbf")
    ap.add_argument("--n-jobs", type=int, default=1)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    data = scenario_dataset(*separated(), N_A, N_B)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["variant", "M_res", "AUC", "accuracy", "mean_round_ms"])
    for variant in args.variants:
        # Direct ignores M_res, so one row is enough
        for m_res in args.m_res if variant != "direct" else args.m_res[:1]:
            cfg = PipelineConfig(variant=variant, m_a=5, m_res=m_res, kernel=args.kernel,
                                 regime=args.regime, n_jobs=args.n_jobs)
            rep = run_lpocv(data, cfg, "B")
            w.writerow([variant, m_res, f"{rep.auc:.6g}", f"{rep.accuracy:.6g}", f"{rep.mean_round_ms:.4g}"])
            fh.flush()
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
