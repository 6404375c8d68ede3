"""From netlist text to an effective model, step by step.

    python3 demos/04_netlist_walkthrough.py
"""

from slhforge import compile_netlist, parse_netlist, print_netlist

SOURCE = """\
# noise cancellation, written as a netlist
space fock(cutoff=6) as c
signal u = gaussian_pulse(amplitude=0.4, center=1.5, width=0.5)
component H0 = HAM(n(c))
component P = ADD(u=[u])
component M = ADD(u=[-u])
component R = BS(T=[[-1]])
component G = SYS(L=[sqrt(0.4) * a(c)])
network loop = H0 <| P <| R <| G <| R <| M <| G
"""

ast = parse_netlist(SOURCE)
print("canonical form:")
print(print_netlist(ast))

compiled = compile_netlist(ast)
print("reduction trace (rightmost component first in signal flow):")
for step in compiled.trace:
    print(f"  after {step.component:3s}: {step.summary}")

g = compiled.triple
print("\neffective triple:")
print("  channels      :", g.channels)
print("  space dim     :", g.space.total_dim)
print("  L entries zero:", [entry.is_zero() for entry in g.L])
print("  H monomials   :", str(g.H))
