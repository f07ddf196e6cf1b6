"""
Squeezing helps only when its phase is matched
==============================================

Sweep the imprinted phase at fixed time and compare the QFI with the
unsqueezed (thermal) value. With theta fixed, squeezing wins near
phi = theta/2 and loses near phi = theta/2 + pi/2. Tying theta to phi removes
the losing region altogether.
"""

import numpy as np

from squeezed_qfi import figure_preset, run_sweep

rs = (0.0, 0.2, 0.5, 1.0)

for fig_id, label in (("fig4a", "theta = 0"), ("fig4c", "phi - theta/2 = 0.01")):
    table = run_sweep(figure_preset(fig_id, points=9))
    phi = table.column("phi").reshape(-1, len(rs))[:, 0]
    F = table.column("qfi_analytic").reshape(-1, len(rs))
    print(f"\n{label}   (gamma*t = 5, kT = 0)")
    print("  phi    " + "  ".join(f"r={r:<4}" for r in rs))
    for p, row in zip(phi, F):
        print(f"{p:5.2f}  " + "  ".join(f"{v:.4f}" for v in row))

# %%
# Phase matching over a whole temperature/squeezing grid at gamma*t = 10:
# more squeezing always helps, more temperature always hurts.
table = run_sweep(figure_preset("fig5", points=5))
grid = table.column("qfi_analytic").reshape(5, 5)
print("\nrows kT = 0..2, columns r = 0..2")
print(np.array2string(grid, precision=4))
