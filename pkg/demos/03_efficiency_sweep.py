"""Purity, TrSD and squeezing against Alice's measurement efficiency.

Sweeps the beam-splitter transmittance so eta_A runs from 0.05 to the
full 0.865, at the fixed angles theta_A = 65 deg, theta_B = 135 deg,
and prints the four metric families per state.  Optionally verifies a
few cells with record ensembles (pass --monte-carlo; takes a minute).
"""

import sys
from pathlib import Path

import numpy as np

import opo_smoothing as om

here = Path(__file__).parent
monte_carlo = "--monte-carlo" in sys.argv

params = om.paper_defaults()
eta_targets = np.linspace(0.05, 0.86, 12)
t_values = [om.transmittance_for_eta_a(e) for e in eta_targets]

config = om.SweepConfig(
    params=params,
    transmittance_values=t_values,
    mode="monte-carlo" if monte_carlo else "theory",
    records_per_point=50,
    duration=20e-6,
    seed=7,
)
result = om.run_sweep(config)
c = result.columns

print("eta_A   P_T    P_S    P_F   | D_S     D_F    | S_S[dB]  S_F[dB]")
for i in range(result.n_cells):
    print(f"{c['eta_a'][i]:.3f}  {c['purity_t'][i]:.4f} {c['purity_s'][i]:.4f} "
          f"{c['purity_f'][i]:.4f} | {c['trsd_s'][i]:.4f}  {c['trsd_f'][i]:.4f} | "
          f"{c['squeeze_db_s'][i]:+.3f}   {c['squeeze_db_f'][i]:+.3f}")

if monte_carlo:
    print("\nMonte-Carlo spot checks (empirical TrSD vs theory):")
    for i in range(result.n_cells):
        print(f"eta_A={c['eta_a'][i]:.3f}: D_F = {c['mc_trsd_f'][i]:.4f} "
              f"+- {c['mc_stderr_trsd_f'][i]:.4f} (theory {c['trsd_f'][i]:.4f})")

paths = result.save(here / "eta_sweep")
print(f"\nwrote {paths[0]} and {paths[1]}")
