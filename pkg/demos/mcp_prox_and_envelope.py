"""The MCP penalty, its proximal map and its Moreau envelope.

Prints a small table: the prox leaves large inputs untouched (no bias,
unlike soft thresholding), and the envelope sits below the penalty with a
gradient bounded by lambda.
"""

import numpy as np

from vsapg.functions import L1, MCP, mcp_value
from vsapg.moreau import SmoothedTerm

lam, xi = 1.0, 2.0
gamma = 0.5
g = MCP(lam, xi)

z = np.array([-3.0, -1.5, -0.6, -0.2, 0.0, 0.3, 0.8, 1.9, 2.5])
print("    z    mcp(z)   prox_mcp   prox_l1")
for zi, pm, pl in zip(z, g.prox(gamma, z), L1(lam).prox(gamma, z)):
    print(f"{zi:6.2f} {mcp_value(zi, lam, xi):8.4f} {pm:9.4f} {pl:9.4f}")

# the envelope is a C^1 lower approximation that tightens as mu -> 0
v = np.linspace(-3, 3, 13)
print("\n    v    g(v)   g_0.5(v)  g_0.1(v)  |grad g_0.1|")
e5, e1 = SmoothedTerm(g, 0.5), SmoothedTerm(g, 0.1)
for vi in v:
    a = np.array([vi])
    print(f"{vi:6.2f} {g.value(a):7.4f} {e5.value(a):9.4f} {e1.value(a):9.4f} "
          f"{abs(e1.grad(a)[0]):10.4f}")
print(f"\ngradient never exceeds lambda = {lam}")
