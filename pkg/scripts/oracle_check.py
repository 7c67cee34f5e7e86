"""Grid search against DRAOA on the two-element instance, over several grid steps."""

import argparse
import time

from rhsradar.checks import grid_search, oracle_scene
from rhsradar.draoa import DraoaConfig, run_draoa
from rhsradar.signal_chain import link_model


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--steps", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    p.add_argument("--no-clutter", action="store_true")
    args = p.parse_args()
    scene = oracle_scene(with_clutter=not args.no_clutter)
    t0 = time.perf_counter()
    res = run_draoa(scene, DraoaConfig())
    print(f"draoa {res.worst_case_sinr:.6g} (bound {res.relaxed_bound:.6g}) in {time.perf_counter() - t0:.2f} s")
    link = link_model(scene)
    for step in args.steps:
        t0 = time.perf_counter()
        best, psi_t, psi_r = grid_search(link, scene.p_max, step)
        print(f"grid {step:<6g} {best:.6g}  ratio {res.worst_case_sinr / best:.4f}  "
              f"({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
