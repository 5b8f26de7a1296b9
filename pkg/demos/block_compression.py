"""
Unconstrained compression of a soft block
=========================================

A 0.1 m cube on rollers is compressed by 40% of its height. The exact
quasi-static answer is the homogeneous field u_z = -0.4 z, so the error of
the explicit solver can be read off directly.
"""

import os
import tempfile

import numpy as np

from tlfpm.bench import nrmse
from tlfpm.cli.vtk import write_vtk
from tlfpm.material import MaterialParams
from tlfpm.mesh import generate
from tlfpm.solver import BoundaryCondition, Controls, Problem, QuasiStaticSolver

mat = MaterialParams(1000.0, 3000.0, 0.45)

for n in (5, 7, 9):
    mesh = generate.box(0.1, 0.1, 0.1, n, n, n)
    bcs = [
        BoundaryCondition.fix("xmin", 3, x=0.0),
        BoundaryCondition.fix("ymin", 3, y=0.0),
        BoundaryCondition.fix("zmin", 3, z=0.0),
        BoundaryCondition.fix("zmax", 3, z=-0.04),
    ]
    solver = QuasiStaticSolver(Problem(mesh, mat, bcs), Controls(ramp_steps=1000))
    res = solver.solve()
    err = nrmse(res.u[:, 2], -0.4 * mesh.nodes[:, 2])
    print(f"{mesh.n_nodes:5d} nodes  dt = {res.dt:.3e} s  steps = {res.steps:5d}  NRMSE(u_z) = {err:.3e}")

# lateral bulging: near-incompressible, so the top face grows sideways
top = mesh.boundary_nodes("zmax")
print("mean lateral displacement of the top face:", res.u[top, :2].mean(axis=0))

path = os.path.join(tempfile.mkdtemp(), "block.vtk")
write_vtk(res.complex, res.u, path)
print("final field written to", path)
