"""How large can the pseudo-time step be before the first projection fails?

After the cut-off, the nodes pinned at 1 can already hold more than the target
volume; the free nodes would then need a negative mean.  This script reports
that mean for the first step of the mid-edge cantilever at a few step sizes.

    python demos/feasible_step_size.py
"""
import numpy as np

from pftopo import RunConfig
from pftopo.constraints import cutoff_projection, partition
from pftopo.optimize import Optimizer
from pftopo.phasefield import semi_implicit_step


def main(cells=(160, 80)):
    for dt in (0.06, 0.03, 0.015, 0.0075):
        opt = Optimizer(RunConfig(problem="cantilever_mid", cells=cells, dt=dt))
        st = opt.initial_state()
        raw = semi_implicit_step(opt.grid, st.phi, st.u, opt.material, opt.loads,
                                 opt.config.phase_params(), opt.measure)
        ring, _ = cutoff_projection(raw, dt)
        part = partition(ring, opt.measure)
        m = opt.measure
        pinned = float(np.sum(m[ring == 1.0]))
        mean = (opt.V0 - pinned) / part.d2_measure
        print(f"dt={dt:<7g} volume at 1: {pinned / opt.V0:6.3f} V0   free-node mean needed: {mean:+.4f}"
              f"   {'ok' if 0 <= mean <= 1 else 'infeasible'}")


if __name__ == "__main__":
    main()
