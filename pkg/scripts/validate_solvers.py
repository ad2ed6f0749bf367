"""Scratch validation of assembly + eigensolve against analytic oracles."""

import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from phonox.constants import C0
from phonox.discretize import (
    BCSpec,
    Grid2D,
    assemble_elastic,
    assemble_optical,
    uniform_grid,
)
from phonox.eigensolve import lowest_modes, solve_modes, saw_mode, christoffel_velocities
from phonox.materials import isotropic_record

iso = isotropic_record("iso", density=2329.0, c11=165.7e9, c44=79.6e9, n_optical=3.476)
mats = {"iso": iso}

# 1. homogeneous medium, periodic in-plane, shear branch omega = v_s k
t0 = time.time()
g = uniform_grid((0, 200e-9), (0, 200e-9), 50e-9, "iso")
bc = BCSpec(ymin="periodic", ymax="periodic", zmin="periodic", zmax="periodic")
k = math.pi / 400e-9
ops = assemble_elastic(g, mats, k, bc=bc)
vs = math.sqrt(79.6e9 / 2329.0)
vl = math.sqrt(165.7e9 / 2329.0)
modes = lowest_modes(ops, 4)
freqs = [m.omega.real for m in modes]
print("1. shear/long branches:", [f"{f/(vs*k):.6f}" for f in freqs[:3]],
      "(expect 2x 1.0 shear, then vl/vs =", f"{vl/vs:.4f})", f"{time.time()-t0:.2f}s")

# 2. Hermitian without PML
dev = abs(ops.K - ops.K.getH()).max() / abs(ops.K).max()
print("2. hermiticity dev:", dev)

# 3. free-free rod modes along z: omega_n = n pi v_L / L (ny=2 periodic)
t0 = time.time()
L = 1e-6
nz = 81
g = Grid2D(
    ys=np.array([0.0, 10e-9]),
    zs=np.linspace(0, L, nz),
    labels=np.full((2, nz), "iso", dtype=object),
    fill=np.ones((2, nz)),
)
bc = BCSpec(ymin="periodic", ymax="periodic")
ops = assemble_elastic(g, mats, 0.0, bc=bc)
modes = lowest_modes(ops, 8)
freqs = sorted(m.omega.real for m in modes)
print("3. rod: lowest 8 omegas/(pi vL/L):", [f"{f/(math.pi*vl/L):.4f}" for f in freqs],
      f"{time.time()-t0:.2f}s")

# 4. uniform optical: omega = c k / n
g = uniform_grid((0, 400e-9), (0, 400e-9), 50e-9, "iso")
bc = BCSpec(ymin="periodic", ymax="periodic", zmin="periodic", zmax="periodic")
k = math.pi / 500e-9
ops = assemble_optical(g, mats, k, bc=bc)
modes = lowest_modes(ops, 2)
print("4. plane wave: omega n/(c k) =", [f"{m.omega.real*3.476/(C0*k):.8f}" for m in modes])

# 5. symmetric slab waveguide TE0 effective index
t0 = time.time()
n1, n2 = 3.476, 1.444
clad = isotropic_record("clad", density=2203.0, c11=78.5e9, c44=31.2e9, n_optical=n2)
d = 0.25e-6
ext = 2.0e-6
sp_ = 0.01e-6
zs = np.arange(-ext, ext + sp_ / 2, sp_)
nzn = len(zs)
g = Grid2D(
    ys=np.array([0.0, 20e-9]),
    zs=zs,
    labels=np.where(np.abs(zs)[None, :].repeat(2, 0) <= d / 2, "iso", "clad").astype(object),
    fill=np.ones((2, nzn)),
)
bc = BCSpec(ymin="periodic", ymax="periodic", zmin="fixed", zmax="fixed")
beta = 2 * math.pi / 1.55e-6 * 2.8  # try n_eff ~ 2.8
ops = assemble_optical(g, mats | {"clad": clad}, beta, bc=bc)
modes = lowest_modes(ops, 3)
omega = modes[0].omega.real
neff = C0 * beta / omega
# transcendental slab TE dispersion at this omega: tan(kappa d/2) = gamma/kappa
k0 = omega / C0


def slab_resid(neff_try):
    kap = k0 * math.sqrt(max(n1**2 - neff_try**2, 1e-18))
    gam = k0 * math.sqrt(max(neff_try**2 - n2**2, 1e-18))
    return math.tan(kap * d / 2) - gam / kap


lo, hi = n2 + 1e-6, n1 - 1e-6
import scipy.optimize as so
# bracket the fundamental root
grid_n = np.linspace(lo, hi, 4000)
vals = [slab_resid(x) for x in grid_n]
root = None
for i in range(len(grid_n) - 1):
    if vals[i] * vals[i + 1] < 0 and abs(vals[i]) < 10:
        root = so.brentq(slab_resid, grid_n[i], grid_n[i + 1])
        break
print(f"5. slab: solver neff = {neff:.6f}, transcendental = {root:.6f}, "
      f"diff = {abs(neff-root):.2e}  {time.time()-t0:.2f}s")

# 6. Rayleigh wave, isotropic Poisson 0.25
t0 = time.time()
nu = 0.25
E = 100e9
mu = E / (2 * (1 + nu))
lam_ = E * nu / ((1 + nu) * (1 - 2 * nu))
ray = isotropic_record("ray", density=3000.0, c11=lam_ + 2 * mu, c44=mu)
vs_r = math.sqrt(mu / 3000.0)
res = saw_mode(ray, 0.0, 2 * math.pi / 1e-6, depth_wavelengths=3.0, nodes_per_wavelength=60)
print(f"6. Rayleigh: v/vs = {res.velocity/vs_r:.5f} (expect 0.9194), "
      f"class={res.classification}, {time.time()-t0:.2f}s")
