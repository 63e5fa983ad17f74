"""The alignment variant: velocity-consensus forcing and its dissipation.

With a symmetric nonnegative kernel the alignment term removes kinetic energy
through the symmetrized double integral (1/2) iint psi rho rho |u(y)-u(x)|^2,
carries no net momentum, and its work against the velocity equals minus that
dissipation exactly at the quadrature level.
"""

import numpy as np

from epsim import forces as nf
from epsim.dynamics import SimConfig, simulate
from epsim.transport import velocity_at

cfg = SimConfig(dim=1, T=1.0, n_outputs=6, dt_max=0.01, gamma=0.5,
                v="none", w="none", psi="gaussian(0.25,2.0)",
                system="euler_alignment",
                rho0="cosine(0.15,2)", u0="sine(0.05,1)+sine(0.03,2)")
traj = simulate(cfg, collect_snapshots=False)

print(" t    kinetic     align-dissipation  residual")
for t, r in zip(traj.times, traj.reports):
    print(f"{t:4.1f}  {r.kinetic:.4e}   {r.diss_align:.4e}     {r.residual:+.2e}")

st, env = traj.final_state, traj.env
pos = st.fwd.clamped_positions()
u_at = velocity_at(st.c, env.sine, pos)
D = nf.alignment_dissipation(pos, env.wrho0, u_at, env.kernels.psi)
F = nf.alignment_force(pos, env.wrho0, u_at, env.kernels, env.sine)
work = float(np.einsum("ai,ai->", F, st.c))
mom = np.abs(nf.alignment_total_force(pos, env.wrho0, u_at, env.kernels.psi)).max()
print(f"\nat T: dissipation {D:.4e}, |dissipation + force work| {abs(D + work):.1e},")
print(f"net alignment momentum {mom:.1e} (both vanish identically)")
