"""Finite-difference solvers and their convergence behavior.

Solves each benchmark PDE on a manufactured solution, tabulates the
observed convergence order (it should sit near 2), and shows a solve with
a random input field.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from opvae.fields import FieldSample, Grid1d, Grid2d
from opvae.gp import Kernel1d, MeanFunction, sample_gp
from opvae.pde import solve_diffusion_1d, solve_elliptic_2d, solve_poisson_2d

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# ---------------------------------------------------------------------------
# 1. Manufactured-solution convergence, 1-d diffusion.
#
# With k = e^x and u* = 1 - x^2 the forcing is f = 0.2 e^x (x + 1); the
# discrete solution must approach u* at second order as h shrinks.

print("1-d diffusion, k = e^x, u* = 1 - x^2")
errors = []
sizes = [51, 101, 201, 401]
for n in sizes:
    g = Grid1d(-1.0, 1.0, n)
    x = g.points()
    u = solve_diffusion_1d(FieldSample(g, np.exp(x)),
                           FieldSample(g, 0.2 * np.exp(x) * (x + 1.0)))
    errors.append(np.abs(u.values - (1.0 - x * x)).max())
for (n1, e1), (n2, e2) in zip(zip(sizes, errors), zip(sizes[1:], errors[1:])):
    order = np.log(e1 / e2) / np.log((n2 - 1) / (n1 - 1))
    print(f"  n={n1:4d} -> n={n2:4d}: max err {e1:.2e} -> {e2:.2e}, observed order {order:.2f}")

# ---------------------------------------------------------------------------
# 2. The same story in 2-d, for the Poisson and variable-coefficient forms.

print("2-d Poisson, u* = sin(pi x) sin(pi y)")
prev = None
for n in (26, 51, 101):
    g = Grid2d(0.0, 1.0, 0.0, 1.0, n, n)
    p = g.coords()
    f = (np.pi**2 / 5.0) * np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])
    u = solve_poisson_2d(FieldSample(g, f))
    err = np.abs(u.values - np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])).max()
    if prev is not None:
        print(f"  {prev[0]}^2 -> {n}^2: order "
              f"{np.log(prev[1] / err) / np.log((n - 1) / (prev[0] - 1)):.2f}")
    prev = (n, err)

# ---------------------------------------------------------------------------
# 3. A random-coefficient solve: sample log k from the GP prior, push it
#    through the divergence-form solver, and look at the pair.

g = Grid1d(-1.0, 1.0, 401)
x = g.points()
logk = sample_gp(MeanFunction("sine"), Kernel1d(0.5, 0.1), g, n=1, seed=5)[0]
k = FieldSample(g, np.exp(logk.values))
f = FieldSample(g, 2.0 * np.sin(2.0 * np.pi * x))
u = solve_diffusion_1d(k, f)

fig, axes = plt.subplots(1, 2, figsize=(10, 3.5))
axes[0].plot(x, k.values)
axes[0].set_title("sampled diffusivity k(x)")
axes[1].plot(x, u.values, "C3")
axes[1].set_title("solution of -(1/10)(k u')' = 2 sin(2 pi x)")
fig.tight_layout()
fig.savefig(OUT / "pde_random_coefficient.png", dpi=120)

# And one elliptic solve in 2-d with a lognormal coefficient field.
g2 = Grid2d(0.0, 1.0, 0.0, 1.0, 51, 51)
p2 = g2.coords()
from opvae.gp import Kernel2d
logk2 = sample_gp(MeanFunction("zero"), Kernel2d(0.1, 0.1), g2, n=1, seed=6)[0]
f2 = FieldSample(g2, 4.0 * (np.sin(2 * np.pi * p2[:, 0]) + np.sin(2 * np.pi * p2[:, 1])))
u2 = solve_elliptic_2d(FieldSample(g2, np.exp(logk2.values)), f2)

fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
for ax, fld, title in ((axes[0], np.exp(logk2.values), "k(x, y)"),
                       (axes[1], u2.values, "u(x, y)")):
    im = ax.imshow(fld.reshape(51, 51).T, origin="lower", extent=(0, 1, 0, 1))
    fig.colorbar(im, ax=ax)
    ax.set_title(title)
fig.tight_layout()
fig.savefig(OUT / "pde_elliptic_2d.png", dpi=120)

print(f"figures written to {OUT}")
