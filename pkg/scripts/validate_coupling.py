"""Scratch validation of coupling integrals against analytic oracles."""

import math
import sys
import time
from pathlib import Path

import numpy as np
import scipy.optimize as so

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from phonox.constants import C0, EPS0, HBAR
from phonox.coupling import (
    InterfaceSet,
    _segment,
    g_om_moving_boundary,
    g_om_photoelastic,
    g_em,
    StaticField,
    mech_mass_integral,
    microwave_quantities,
    phase_sum,
)
from phonox.discretize import BCSpec, Grid2D, assemble_optical
from phonox.eigensolve import ModeField, lowest_modes
from phonox.materials import isotropic_record

# --- 1. slab moving-boundary oracle ---------------------------------------
# symmetric slab n1/n2; boundary moves outward by delta on both faces.
n1, n2 = 3.476, 1.444
core = isotropic_record("core", 2329.0, 165.7e9, 79.6e9, n_optical=n1)
clad = isotropic_record("clad", 2203.0, 78.5e9, 31.2e9, n_optical=n2)
mats = {"core": core, "clad": clad}
d = 0.25e-6
ext = 1.5e-6
sp = 2.5e-9
zs = np.arange(-ext, ext + sp / 2, sp)
nzn = len(zs)
labels = np.where(np.abs(zs)[None, :].repeat(2, 0) <= d / 2, "core", "clad").astype(object)
g = Grid2D(ys=np.array([0.0, 20e-9]), zs=zs, labels=labels, fill=np.ones((2, nzn)))
bc = BCSpec(ymin="periodic", ymax="periodic", zmin="fixed", zmax="fixed")
beta = 2 * math.pi / 1.55e-6 * 2.8
ops = assemble_optical(g, mats, beta, bc=bc)
opt = lowest_modes(ops, 1)[0]
omega = float(opt.omega.real)


def slab_omega(dd):
    """omega(beta) for slab thickness dd from the TE transcendental equation."""

    def resid(om):
        k0 = om / C0
        kap = math.sqrt(max((n1 * k0) ** 2 - beta**2, 1e-4))
        gam = math.sqrt(max(beta**2 - (n2 * k0) ** 2, 1e-4))
        return math.tan(kap * dd / 2) - gam / kap

    return so.brentq(resid, omega * 0.9, omega * 1.1, xtol=1e-3)


delta = 1e-12
# per-face displacement delta moves the thickness by 2 delta
d_omega_oracle = (slab_omega(d + 2 * delta) - slab_omega(d - 2 * delta)) / (2 * delta)

# synthetic mechanical mode: uniform outward boundary motion u_z = sign(z)*u0
u0 = 1.0e-12
ny, nz_ = g.shape
uz = np.where(zs[None, :].repeat(2, 0) > 0, u0, -u0).astype(complex)
w_m = 2 * math.pi * 5e9
mech = ModeField(omega=w_m, k=0.0, fields={"uz": uz}, grid=g, kind="elastic")

# interface set: two slab faces, normals outward from the core
L = 20e-9  # strip width: matches the per-unit-length metric of the grid
pts_top = [[0.0, 10e-9, d / 2]]
pts_bot = [[0.0, 10e-9, -d / 2]]
iface = _segment(pts_top, [[0, 0, 1.0]], [L], n1**2, n2**2) + _segment(
    pts_bot, [[0, 0, -1.0]], [L], n1**2, n2**2
)

g_num = g_om_moving_boundary(
    opt, mech, iface, mats, propagation="co", n_cells=1, cell_length=1.0
)
# analytic: g = sqrt(hbar/2 w_m) * |domega/ddelta| * u0 / sqrt(int rho |u|^2 dV)
i_rho = mech_mass_integral(mech, mats) * 1.0
g_ana = math.sqrt(HBAR / (2 * w_m)) * abs(d_omega_oracle) * u0 / math.sqrt(i_rho)
print(f"1. slab MB: numeric={g_num:.6e} analytic={g_ana:.6e} "
      f"ratio={g_num/g_ana:.4f}")

# --- 2. uniform photoelastic oracle ----------------------------------------
# uniform strain S1=s in a homogeneous dielectric with isotropic p:
# domega = omega n^2 p s / 2 for E polarized along the strain-coupled axis.
p11, p12 = -0.094, 0.017
homo = isotropic_record("homo", 2329.0, 165.7e9, 79.6e9, n_optical=n1, p11=p11, p12=p12)
gh = Grid2D(
    ys=np.array([0.0, 20e-9]),
    zs=np.linspace(0, 100e-9, 5),
    labels=np.full((2, 5), "homo", dtype=object),
    fill=np.ones((2, 5)),
)
bцы = None
bch = BCSpec(ymin="periodic", ymax="periodic", zmin="periodic", zmax="periodic")
k_o = 2 * math.pi / 1.55e-6 * n1
opsh = assemble_optical(gh, {"homo": homo}, k_o, bc=bch)
opth = lowest_modes(opsh, 1)[0]
omega_h = float(opth.omega.real)

s_mag = 1e-6
a_cell = 100e-9
# uniform S2 strain (yy): u_y = s * y  -> couples to E_y via p11
yy = gh.ys[:, None].repeat(5, 1)
mech_h = ModeField(
    omega=w_m, k=0.0, fields={"uy": (s_mag * yy).astype(complex)}, grid=gh, kind="elastic"
)
g_pe = g_om_photoelastic(opth, mech_h, {"homo": homo}, propagation="co",
                         cell_length=a_cell)
i_rho_h = mech_mass_integral(mech_h, {"homo": homo}) * a_cell
d_omega_pe = omega_h * n1**2 * p11 * s_mag / 2.0
g_pe_ana = math.sqrt(HBAR / (2 * w_m)) * abs(d_omega_pe) / math.sqrt(i_rho_h)
print(f"2. uniform PE: numeric={g_pe:.6e} analytic={g_pe_ana:.6e} ratio={g_pe/g_pe_ana:.4f}")

# --- 3. phase matching -------------------------------------------------------
a = 200e-9
k_m = math.pi / a
k_o2 = math.pi / (2 * a)
co = abs(phase_sum(-k_m, a, 8))
counter = abs(phase_sum(2 * k_o2 - k_m, a, 8))
print(f"3. phase sums over 8 cells: co={co:.3e}, counter={counter:.3e}, ratio={co/counter:.2e}")

# --- 4. g_em toy capacitor ---------------------------------------------------
# uniform strain S3 mode + uniform E_z drive in a piezo slab.
import dataclasses
ln_like = isotropic_record("pz", 4700.0, 203e9, 60e9, n_optical=2.2, eps_static_rel=30.0)
e33 = 1.3
pz = np.zeros((3, 6))
pz[2, 2] = e33
ln_like = dataclasses.replace(ln_like, piezo=pz)
gp = Grid2D(
    ys=np.array([0.0, 20e-9]),
    zs=np.linspace(0, 100e-9, 6),
    labels=np.full((2, 6), "pz", dtype=object),
    fill=np.ones((2, 6)),
)
zzp = gp.zs[None, :].repeat(2, 0)
s3 = 1e-6
mech_p = ModeField(omega=w_m, k=0.0, fields={"uz": (s3 * zzp).astype(complex)}, grid=gp)
v0 = 1.0
dcap = 100e-9
ez = np.full(gp.shape, v0 / dcap, dtype=complex)
stat = StaticField(grid=gp, e={"ez": ez}, v0=v0)
c_idt, c_mu = 0.3e-15, 70e-15
w_mu = 2 * math.pi * 4.7e9
a_len = 100e-9
gem = g_em(mech_p, stat, {"pz": ln_like}, c_idt, c_mu, w_mu, cell_length=a_len)
# closed form: overlap = e33 * s3 * (V0/d) * Volume; U'_m = 2 w^2 rho s3^2 z^2 integral
area = 20e-9 * 100e-9
vol = area * a_len
overlap = e33 * s3 * (v0 / dcap) * vol
int_u2 = float(np.trapz(np.trapz(np.abs(s3 * zzp) ** 2, dx=gp.dz, axis=1), dx=gp.dy, axis=0)) * a_len
u_m = 2 * w_m**2 * 4700.0 * int_u2
u_mu = 2 * (c_idt + c_mu) * v0**2
gem_ana = math.sqrt(w_mu * w_m / (u_m * u_mu)) * overlap
print(f"4. g_em toy: numeric={gem:.6e} analytic={gem_ana:.6e} ratio={gem/gem_ana:.6f}")

# --- 5. microwave quantities -------------------------------------------------
z, kap = microwave_quantities(0.3e-15, 70e-15, 2 * math.pi * 4.7e9, 1.7e-5)
print(f"5. Z_mu={z:.1f} ohm (paper ~478);  kappa_LN/2pi={kap/2/math.pi:.1f} Hz (paper 340)")
