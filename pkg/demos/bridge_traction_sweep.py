"""Bridge with three deck loads; the stabilized objective should grow with the load.

    python demos/bridge_traction_sweep.py [--cells 80 40] [--dt 0.0005]
"""
import argparse

from pftopo import RunConfig, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cells", type=int, nargs=2, default=(80, 40))
    ap.add_argument("--dt", type=float, default=None, help="default: the builtin step")
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--halvings", type=int, default=6)
    args = ap.parse_args()

    for s in (0.0, -0.5, -1.0):
        cfg = RunConfig(problem="bridge", cells=tuple(args.cells), dt=args.dt, traction=(0.0, s),
                        n_max=args.steps, dt_halvings=args.halvings, retry_infeasible=True,
                        snapshot_every=0, output_dir=f"out/bridge_s{abs(s):g}")
        out = run(cfg)
        print(f"s=(0,{s:+.1f})  {out['status']:14s} steps={out['iterations']:4d}  "
              f"dt_final={out['dt_final']:.3g}  J={out['J_final']:.5f}")


if __name__ == "__main__":
    main()
