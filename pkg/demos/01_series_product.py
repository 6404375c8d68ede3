"""Composing two components with the series product.

A damped mode feeding a signal adder: the downstream displacement shifts
the effective coupling and the Hamiltonian picks up a bilinear cross
term.  Run directly:

    python3 demos/01_series_product.py
"""

import numpy as np

from slhforge import (
    ConstantSignal,
    HilbertSpace,
    annihilator,
    series,
    signal_adder,
    system_coupling,
    triple_summary,
)

space = HilbertSpace.fock("c", 5)
a = annihilator(space, "c")

cavity_coupling = system_coupling([np.sqrt(0.4) * a], space)
displace = signal_adder(["u"], space)

composed = series(displace, cavity_coupling)

print("upstream:  ", triple_summary(cavity_coupling))
print("downstream:", triple_summary(displace))
print("composed:  ", triple_summary(composed))

binds = {"u": ConstantSignal("u", 0.3 - 0.2j)}
L_eff = composed.L[0].evaluate(0.0, binds)
print("\nL at u = 0.3-0.2i: column 1 =", np.round(L_eff.matrix[:, 1], 4))
print("H cross term (top-left 2x2 block):")
print(np.round(composed.H.evaluate(0.0, binds).matrix[:2, :2], 4))

# swapping the order flips the sign of the cross term
reversed_order = series(cavity_coupling, displace)
diff = composed.H.evaluate(0.0, binds) - (-1.0) * reversed_order.H.evaluate(0.0, binds)
print("\nH(fwd) == -H(rev):", float(np.max(np.abs(diff.matrix))) < 1e-12)
