"""Generate the shipped material JSON files (crystal-frame constants).

Run from the repo root:  python scripts/make_material_data.py
Also solves for the lithium-niobate in-plane angle that realizes
e'_11 = -4.00 C/m^2 in the device frame and prints it.
"""

import json
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from phonox.constants import EPS0
from phonox.materials import (
    CrystalOrientation,
    MaterialRecord,
    rotate_material,
    save_material,
)

OUT = Path(__file__).resolve().parents[1] / "src" / "phonox" / "data" / "materials"
OUT.mkdir(parents=True, exist_ok=True)

GPA = 1e9


def cubic(c11, c12, c44):
    c = np.zeros((6, 6))
    c[:3, :3] = c12
    np.fill_diagonal(c[:3, :3], c11)
    c[3, 3] = c[4, 4] = c[5, 5] = c44
    return c


def trigonal(c11, c12, c13, c14, c33, c44):
    c66 = 0.5 * (c11 - c12)
    c = np.zeros((6, 6))
    c[0, 0] = c[1, 1] = c11
    c[0, 1] = c[1, 0] = c12
    c[0, 2] = c[2, 0] = c[1, 2] = c[2, 1] = c13
    c[2, 2] = c33
    c[3, 3] = c[4, 4] = c44
    c[5, 5] = c66
    c[0, 3] = c[3, 0] = c14
    c[1, 3] = c[3, 1] = -c14
    c[4, 5] = c[5, 4] = c14
    return c


def cubic_photoelastic(p11, p12, p44):
    p = np.zeros((6, 6))
    p[:3, :3] = p12
    np.fill_diagonal(p[:3, :3], p11)
    p[3, 3] = p[4, 4] = p[5, 5] = p44
    return p


def trigonal_photoelastic(p11, p12, p13, p14, p31, p33, p41, p44):
    p = np.zeros((6, 6))
    p[0, 0] = p[1, 1] = p11
    p[0, 1] = p[1, 0] = p12
    p[0, 2] = p[1, 2] = p13
    p[0, 3] = p14
    p[1, 3] = -p14
    p[2, 0] = p[2, 1] = p31
    p[2, 2] = p33
    p[3, 0] = p41
    p[3, 1] = -p41
    p[3, 3] = p44
    p[4, 4] = p44
    p[4, 5] = p41
    p[5, 4] = p14
    p[5, 5] = 0.5 * (p11 - p12)
    return p


def diag_eps(e1, e2, e3):
    return np.diag([e1, e2, e3]).astype(float)


# --- silicon (cubic m3m) -------------------------------------------------
silicon = MaterialRecord(
    name="silicon",
    density=2329.0,
    stiffness=cubic(165.7 * GPA, 63.9 * GPA, 79.6 * GPA),
    permittivity_static=diag_eps(11.7, 11.7, 11.7) * EPS0,
    permittivity_optical=diag_eps(3.476**2, 3.476**2, 3.476**2),
    photoelastic=cubic_photoelastic(-0.094, 0.017, -0.051),
    loss_tangent=0.0,
    source=(
        "Stiffness and density: Auld, Acoustic Fields and Waves in Solids, "
        "2nd ed. (1990), Vol. I appendix tables (Hall 1967 values). "
        "Optical index 3.476 at 1550 nm; photoelastic constants Biegelsen (1974)."
    ),
)

# --- sapphire (trigonal -3m) ---------------------------------------------
sapphire = MaterialRecord(
    name="sapphire",
    density=3986.0,
    stiffness=trigonal(497.0 * GPA, 163.0 * GPA, 111.0 * GPA, -23.5 * GPA, 498.0 * GPA, 147.4 * GPA),
    permittivity_static=diag_eps(9.4, 9.4, 11.6) * EPS0,
    permittivity_optical=diag_eps(1.7462**2, 1.7462**2, 1.7383**2),
    photoelastic=trigonal_photoelastic(-0.23, -0.03, 0.02, 0.0, -0.04, -0.20, 0.01, -0.10),
    loss_tangent=0.0,
    source=(
        "Stiffness and density: Auld, Acoustic Fields and Waves in Solids, "
        "2nd ed. (1990), Vol. I appendix tables (Al2O3, Wachtman et al. 1960). "
        "Optical indices at 1550 nm (Malitson dispersion); photoelastic "
        "constants approximate literature values (Dixon 1967 scale)."
    ),
)

# --- lithium niobate (trigonal 3m) ---------------------------------------
e15, e22, e31, e33 = 3.7, 2.5, 0.2, 1.3
piezo_ln = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, e15, -e22],
        [-e22, e22, 0.0, e15, 0.0, 0.0],
        [e31, e31, e33, 0.0, 0.0, 0.0],
    ]
)
lithium_niobate = MaterialRecord(
    name="lithium_niobate",
    density=4700.0,
    stiffness=trigonal(203.0 * GPA, 53.0 * GPA, 75.0 * GPA, 9.0 * GPA, 245.0 * GPA, 60.0 * GPA),
    piezo=piezo_ln,
    permittivity_static=diag_eps(44.3, 44.3, 27.5) * EPS0,
    permittivity_optical=diag_eps(2.211**2, 2.211**2, 2.138**2),
    photoelastic=trigonal_photoelastic(-0.026, 0.09, 0.133, -0.075, 0.179, 0.071, -0.151, 0.146),
    loss_tangent=1.7e-5,
    source=(
        "Constant-field stiffness, piezoelectric stress constants, clamped "
        "permittivity and density: Weis & Gaylord, Appl. Phys. A 37, 191 (1985) "
        "compilation (rounded). Optical indices at 1550 nm; strain-optic "
        "constants per the same compilation."
    ),
)

# --- silicon dioxide (fused, isotropic) -----------------------------------
sio2_c11 = 2203.0 * 5970.0**2
sio2_c44 = 2203.0 * 3764.0**2
silicon_dioxide = MaterialRecord(
    name="silicon_dioxide",
    density=2203.0,
    stiffness=cubic(sio2_c11, sio2_c11 - 2 * sio2_c44, sio2_c44),
    permittivity_static=diag_eps(3.9, 3.9, 3.9) * EPS0,
    permittivity_optical=diag_eps(1.444**2, 1.444**2, 1.444**2),
    photoelastic=cubic_photoelastic(0.121, 0.270, 0.5 * (0.121 - 0.270)),
    loss_tangent=0.0,
    source=(
        "Fused silica: stiffness from longitudinal/shear sound speeds "
        "5970/3764 m/s at density 2203 kg/m^3; n = 1.444 at 1550 nm; "
        "photoelastic constants Primak & Post (1959)."
    ),
)

# --- aluminum (cubic, electrodes) -----------------------------------------
aluminum = MaterialRecord(
    name="aluminum",
    density=2700.0,
    stiffness=cubic(106.8 * GPA, 60.4 * GPA, 28.3 * GPA),
    permittivity_static=diag_eps(1.0, 1.0, 1.0) * EPS0,
    permittivity_optical=diag_eps(1.0, 1.0, 1.0),
    loss_tangent=0.0,
    source=(
        "Elastic constants: Auld, Acoustic Fields and Waves in Solids, 2nd ed. "
        "(1990) appendix tables. Used for electrode mass loading only; "
        "permittivities are placeholders (electrodes are equipotentials)."
    ),
)


def ln_e11(psi_deg):
    psi = math.radians(psi_deg)
    c, s = math.cos(psi), math.sin(psi)
    r = np.array([[0.0, c, s], [0.0, -s, c], [1.0, 0.0, 0.0]])
    rot = rotate_material(lithium_niobate, CrystalOrientation(r))
    return rot.piezo[0, 0]


# solve e'_11(psi) = -4.00 by bisection in (180, 270)
lo, hi = 181.0, 225.0  # e11 decreasing from ~-2.5 toward the -4.03 extremum
flo, fhi = ln_e11(lo), ln_e11(hi)
print(f"e11({lo}) = {flo:.4f}, e11({hi}) = {fhi:.4f}")
target = -4.0
for _ in range(80):
    mid = 0.5 * (lo + hi)
    fm = ln_e11(mid)
    if (fm - target) * (flo - target) <= 0:
        hi, fhi = mid, fm
    else:
        lo, flo = mid, fm
psi_star = 0.5 * (lo + hi)
print(f"LN in-plane angle for e'_11 = -4: psi = {psi_star:.4f} deg, e11 = {ln_e11(psi_star):.6f}")

for m in (silicon, sapphire, lithium_niobate, silicon_dioxide, aluminum):
    path = OUT / f"{m.name}.json"
    save_material(m, path)
    print("wrote", path)
