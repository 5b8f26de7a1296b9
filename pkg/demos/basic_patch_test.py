"""
Stencils, dual cells and the patch test
=======================================

A small tour of the building blocks: the median-dual cells of a jittered
triangle mesh, the least-squares gradient stencils, and the internal force of
an affine displacement field.
"""

import numpy as np

from tlfpm.approx import ShapeFunctionSet
from tlfpm.dynamics import ForceAssembler, PenaltyConfig
from tlfpm.material import MaterialParams
from tlfpm.mesh import build_dual_complex, generate

# a 1 x 1 square with 8 x 8 nodes, interior nodes shaken by 25% of the spacing
mesh = generate.rectangle(1.0, 1.0, 8, 8, jitter=0.25, seed=4)
cx = build_dual_complex(mesh)
print(f"{mesh.n_nodes} nodes, {mesh.n_elements} triangles, {cx.n_interfaces} interfaces")
print(f"sum of cell areas {cx.total_volume:.15f} vs mesh area {mesh.volume:.15f}")

# each point gets a stencil over the cells that share an interface with it
shapes = ShapeFunctionSet(cx)
sizes = np.bincount([len(s.neighbour_indices) for s in shapes.stencils])
print("support sizes:", {k: int(v) for k, v in enumerate(sizes) if v})

# gradients of an affine field are reproduced exactly on every cell
B = np.array([[0.08, -0.03], [0.05, 0.10]])
u = mesh.nodes @ B.T
print("max gradient error:", np.abs(shapes.gradients(u) - B).max())

# soft tissue: rho = 1000 kg/m^3, E = 3 kPa, nu = 0.45
mat = MaterialParams(1000.0, 3000.0, 0.45)
boundary = np.unique(np.concatenate([mesh.boundary_nodes(n) for n in mesh.boundary_sets]))
interior = np.setdiff1d(np.arange(mesh.n_nodes), boundary)

# with the interior interfaces alone the affine field is not in equilibrium
# next to the clamped boundary ...
plain = ForceAssembler(shapes, mat, PenaltyConfig(20.0))
f, _ = plain.internal_force(u)
print(f"interior residual, interior flux only:      {np.abs(f[interior]).max():.3e} N")

# ... adding the consistency flux on the essential boundary restores it
essential = {name: np.ones(2, bool) for name in mesh.boundary_sets}
full = ForceAssembler(shapes, mat, PenaltyConfig(20.0), essential=essential, boundary_flux=True)
f, _ = full.internal_force(u)
print(f"interior residual, with boundary flux:      {np.abs(f[interior]).max():.3e} N")
