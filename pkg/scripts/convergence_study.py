"""Euler-regression error against dt for every scenario in a pack, with fitted ratios.

    python scripts/convergence_study.py --levels 4 --paths 50000 --out out/convergence
"""
from __future__ import annotations

import argparse
from pathlib import Path

from cfkac.csvio import write_csv
from cfkac.experiments import CONVERGENCE_HEADER, convergence
from cfkac.scenario import McSettings, load_scenarios, scenario_pack_dir


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=scenario_pack_dir())
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--paths", type=int, default=None)
    ap.add_argument("--out", type=Path, default=Path("out/convergence"))
    args = ap.parse_args()

    for sc in load_scenarios(args.config):
        if not sc.coeffs.sigma_gamma_zero:
            print(f"{sc.id}: skipped (sigma*gamma != 0, no reference solution)")
            continue
        if args.paths is not None:
            sc = sc.replace(mc=McSettings(args.paths, sc.mc.seed, sc.mc.basis_degree))
        st = convergence(sc, args.levels)
        write_csv(args.out / f"{sc.id}.csv", CONVERGENCE_HEADER, st.csv_rows())
        errs = ", ".join(f"{e:.2e}" for e in st.error)
        print(f"{sc.id:18s} errors [{errs}]  fitted ratio {st.fitted_ratio:.2f}")


if __name__ == "__main__":
    main()
