"""Adjoint and Euler estimates next to the characteristics value for a scenario pack.

    python scripts/compare_pack.py --paths 100000 --out out/compare.csv
"""
from __future__ import annotations

import argparse
from pathlib import Path

from cfkac.csvio import write_csv
from cfkac.experiments import COMPARE_HEADER, compare
from cfkac.scenario import McSettings, load_scenarios, scenario_pack_dir


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=scenario_pack_dir())
    ap.add_argument("--paths", type=int, default=None)
    ap.add_argument("--out", type=Path, default=Path("out/compare.csv"))
    args = ap.parse_args()

    rows = []
    for sc in load_scenarios(args.config):
        if args.paths is not None:
            sc = sc.replace(mc=McSettings(args.paths, sc.mc.seed, sc.mc.basis_degree))
        r = compare(sc)
        rows.append(r.csv_row())
        note = "" if sc.coeffs.sigma_gamma_zero else "  (sigma*gamma != 0: U_ref is not Y)"
        print(f"{sc.id:18s} U={r.u_ref:.5f}  adj gap {r.gap_adj:.1e} ({r.gap_adj / r.se_adj:.1f} se)"
              f"  euler gap {r.gap_eur:.1e} (bias allowance {r.bias_allowance:.1e}){note}")
    write_csv(args.out, COMPARE_HEADER, rows)


if __name__ == "__main__":
    main()
