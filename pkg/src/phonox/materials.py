"""Anisotropic material tensors: storage, rotation, and built-in presets.

Tensors are stored in Voigt notation with the index map

    (0,0)->0  (1,1)->1  (2,2)->2  (1,2)/(2,1)->3  (0,2)/(2,0)->4  (0,1)/(1,0)->5

Stiffness (6x6), piezoelectric stress constants e (3x6) and the
strain-optic tensor p (6x6) all follow the engineering-strain convention
in which the Voigt matrix entries equal the corresponding full-tensor
components (no factors of 2).  Rotations therefore use a single code
path: expand to full index form, rotate with the orthogonal matrix, and
contract back.

Static permittivity is absolute (F/m); optical permittivity is relative.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .constants import EPS0

VOIGT_PAIRS = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)]
_VOIGT_INDEX = np.zeros((3, 3), dtype=int)
for _I, (_i, _j) in enumerate(VOIGT_PAIRS):
    _VOIGT_INDEX[_i, _j] = _I
    _VOIGT_INDEX[_j, _i] = _I


class MaterialError(ValueError):
    """Raised for invalid material data or rotations."""


def voigt_to_full4(m6: np.ndarray) -> np.ndarray:
    """Expand a 6x6 Voigt matrix to the full rank-4 tensor t[i,j,k,l]."""
    t = np.empty((3, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                for l in range(3):
                    t[i, j, k, l] = m6[_VOIGT_INDEX[i, j], _VOIGT_INDEX[k, l]]
    return t


def full4_to_voigt(t: np.ndarray) -> np.ndarray:
    m6 = np.empty((6, 6))
    for I, (i, j) in enumerate(VOIGT_PAIRS):
        for J, (k, l) in enumerate(VOIGT_PAIRS):
            m6[I, J] = t[i, j, k, l]
    return m6


def voigt_to_full3(m36: np.ndarray) -> np.ndarray:
    """Expand a 3x6 piezo matrix e_iJ to the full rank-3 tensor e[i,j,k]."""
    t = np.empty((3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                t[i, j, k] = m36[i, _VOIGT_INDEX[j, k]]
    return t


def full3_to_voigt(t: np.ndarray) -> np.ndarray:
    m36 = np.empty((3, 6))
    for i in range(3):
        for J, (j, k) in enumerate(VOIGT_PAIRS):
            m36[i, J] = t[i, j, k]
    return m36


@dataclass(frozen=True)
class CrystalOrientation:
    """Proper orthogonal rotation taking crystal-frame tensors to the device frame.

    Row i of ``rotation`` holds the components of device axis i expressed
    in the crystal frame.
    """

    rotation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        if r.shape != (3, 3):
            raise MaterialError(f"rotation must be 3x3, got {r.shape}")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-12):
            raise MaterialError("rotation is not orthogonal within 1e-12")
        if not math.isclose(np.linalg.det(r), 1.0, abs_tol=1e-12):
            raise MaterialError("rotation must be proper (det = +1)")
        object.__setattr__(self, "rotation", r)

    @classmethod
    def identity(cls) -> "CrystalOrientation":
        return cls(np.eye(3))

    @classmethod
    def about_axis(cls, axis: str, angle_rad: float) -> "CrystalOrientation":
        """Rotation of the device frame by ``angle_rad`` about a coordinate axis."""
        c, s = math.cos(angle_rad), math.sin(angle_rad)
        if axis == "x":
            r = [[1, 0, 0], [0, c, s], [0, -s, c]]
        elif axis == "y":
            r = [[c, 0, -s], [0, 1, 0], [s, 0, c]]
        elif axis == "z":
            r = [[c, s, 0], [-s, c, 0], [0, 0, 1]]
        else:
            raise MaterialError(f"unknown axis {axis!r}")
        return cls(np.array(r, dtype=float))

    def compose(self, other: "CrystalOrientation") -> "CrystalOrientation":
        """Orientation equivalent to applying ``other`` first, then ``self``."""
        return CrystalOrientation(self.rotation @ other.rotation)


@dataclass(frozen=True)
class MaterialRecord:
    """One oriented crystal: density plus stiffness, piezo, permittivity and
    strain-optic tensors.

    Attributes
    ----------
    name : str
    density : float
        kg/m^3.
    stiffness : (6, 6) ndarray
        Voigt stiffness, Pa.  Symmetric positive definite.
    piezo : (3, 6) ndarray
        Piezoelectric stress constants e_iJ, C/m^2.  All-zero for
        non-piezoelectric materials.
    permittivity_static : (3, 3) ndarray
        Absolute static permittivity, F/m.
    permittivity_optical : (3, 3) ndarray
        Relative optical permittivity (n^2 scale).
    photoelastic : (6, 6) ndarray
        Strain-optic constants p_IJ (dimensionless).
    loss_tangent : float
        Microwave dielectric loss tangent.
    """

    name: str
    density: float
    stiffness: np.ndarray
    piezo: np.ndarray = field(default_factory=lambda: np.zeros((3, 6)))
    permittivity_static: np.ndarray = field(default_factory=lambda: EPS0 * np.eye(3))
    permittivity_optical: np.ndarray = field(default_factory=lambda: np.eye(3))
    photoelastic: np.ndarray = field(default_factory=lambda: np.zeros((6, 6)))
    loss_tangent: float = 0.0
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "stiffness", np.asarray(self.stiffness, dtype=float))
        object.__setattr__(self, "piezo", np.asarray(self.piezo, dtype=float))
        object.__setattr__(
            self, "permittivity_static", np.asarray(self.permittivity_static, dtype=float)
        )
        object.__setattr__(
            self, "permittivity_optical", np.asarray(self.permittivity_optical, dtype=float)
        )
        object.__setattr__(self, "photoelastic", np.asarray(self.photoelastic, dtype=float))
        self.validate()

    def validate(self):
        if self.density <= 0:
            raise MaterialError(f"{self.name}: density must be positive")
        c = self.stiffness
        if c.shape != (6, 6):
            raise MaterialError(f"{self.name}: stiffness must be 6x6")
        if not np.allclose(c, c.T, rtol=1e-10, atol=1e-2):
            raise MaterialError(f"{self.name}: stiffness not symmetric")
        if np.linalg.eigvalsh(c).min() <= 0:
            raise MaterialError(f"{self.name}: stiffness not positive definite")
        for nm, eps in (
            ("permittivity_static", self.permittivity_static),
            ("permittivity_optical", self.permittivity_optical),
        ):
            if eps.shape != (3, 3):
                raise MaterialError(f"{self.name}: {nm} must be 3x3")
            if not np.allclose(eps, eps.T, atol=1e-12 * np.abs(eps).max()):
                raise MaterialError(f"{self.name}: {nm} not symmetric")
            if np.linalg.eigvalsh(eps).min() <= 0:
                raise MaterialError(f"{self.name}: {nm} not positive definite")
        if self.piezo.shape != (3, 6):
            raise MaterialError(f"{self.name}: piezo must be 3x6")

    @property
    def is_piezoelectric(self) -> bool:
        return bool(np.any(self.piezo != 0.0))

    def optical_index_mean(self) -> float:
        """Isotropic average of the principal optical refractive indices."""
        return float(np.mean(np.sqrt(np.linalg.eigvalsh(self.permittivity_optical))))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "density": self.density,
            "stiffness": self.stiffness.tolist(),
            "piezo": self.piezo.tolist(),
            "permittivity_static": self.permittivity_static.tolist(),
            "permittivity_optical": self.permittivity_optical.tolist(),
            "photoelastic": self.photoelastic.tolist(),
            "loss_tangent": self.loss_tangent,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MaterialRecord":
        return cls(
            name=d["name"],
            density=float(d["density"]),
            stiffness=np.array(d["stiffness"], dtype=float),
            piezo=np.array(d.get("piezo", np.zeros((3, 6)).tolist()), dtype=float),
            permittivity_static=np.array(d["permittivity_static"], dtype=float),
            permittivity_optical=np.array(d["permittivity_optical"], dtype=float),
            photoelastic=np.array(d.get("photoelastic", np.zeros((6, 6)).tolist()), dtype=float),
            loss_tangent=float(d.get("loss_tangent", 0.0)),
            source=d.get("source", ""),
        )


def rotate_material(m: MaterialRecord, o: CrystalOrientation) -> MaterialRecord:
    """Transform all tensors of ``m`` into the frame defined by ``o``.

    Stiffness and strain-optic tensors rotate as rank 4, the piezo tensor
    as rank 3, permittivities as rank 2.  Density and scalars are
    unchanged.
    """
    r = o.rotation
    c4 = voigt_to_full4(m.stiffness)
    p4 = voigt_to_full4(m.photoelastic)
    e3 = voigt_to_full3(m.piezo)
    c4r = np.einsum("ia,jb,kc,ld,abcd->ijkl", r, r, r, r, c4, optimize=True)
    p4r = np.einsum("ia,jb,kc,ld,abcd->ijkl", r, r, r, r, p4, optimize=True)
    e3r = np.einsum("ia,jb,kc,abc->ijk", r, r, r, e3, optimize=True)

    def sym(a):
        return 0.5 * (a + a.T)

    return replace(
        m,
        stiffness=sym(full4_to_voigt(c4r)),
        photoelastic=full4_to_voigt(p4r),
        piezo=full3_to_voigt(e3r),
        permittivity_static=sym(r @ m.permittivity_static @ r.T),
        permittivity_optical=sym(r @ m.permittivity_optical @ r.T),
    )


def isotropic_record(
    name: str,
    density: float,
    c11: float,
    c44: float,
    n_optical: float = 1.5,
    eps_static_rel: float = 1.0,
    p11: float = 0.0,
    p12: float = 0.0,
) -> MaterialRecord:
    """Convenience constructor for an isotropic solid (c12 = c11 - 2 c44)."""
    c12 = c11 - 2.0 * c44
    c = np.zeros((6, 6))
    c[:3, :3] = c12
    np.fill_diagonal(c[:3, :3], c11)
    c[3, 3] = c[4, 4] = c[5, 5] = c44
    p = np.zeros((6, 6))
    p[:3, :3] = p12
    np.fill_diagonal(p[:3, :3], p11)
    p44 = 0.5 * (p11 - p12)
    p[3, 3] = p[4, 4] = p[5, 5] = p44
    return MaterialRecord(
        name=name,
        density=density,
        stiffness=c,
        permittivity_static=eps_static_rel * EPS0 * np.eye(3),
        permittivity_optical=n_optical**2 * np.eye(3),
        photoelastic=p,
    )


def _data_dir() -> Path:
    env = os.environ.get("PHONOX_DATA_DIR")
    if env:
        return Path(env) / "materials"
    return Path(resources.files("phonox").joinpath("data/materials"))  # type: ignore[arg-type]


def load_material(path: str | Path) -> MaterialRecord:
    with open(path) as fh:
        d = json.load(fh)
    return MaterialRecord.from_dict(d)


def save_material(m: MaterialRecord, path: str | Path):
    with open(path, "w") as fh:
        json.dump(m.to_dict(), fh, indent=1)


_ORIENTATIONS = {
    # Device frame: x along the beam, y in-plane transverse, z surface normal.
    # silicon: (001) wafer, beam along [110]
    "silicon": CrystalOrientation.about_axis("z", math.pi / 4),
    # sapphire: R-plane cut, surface normal tilted 57.6 deg from the c axis
    # within the mirror plane normal to the a axis.  Of the two equivalent
    # R-plane settings (tilt sign couples to the c14 sign convention) we use
    # the one whose minimum surface sound velocity sits ~15% above silicon's.
    "sapphire": CrystalOrientation.about_axis("x", math.radians(-57.6)),
    # lithium niobate: X-cut film (crystal X = device z); in-plane angle chosen
    # so the device-frame e_11 reaches -4 C/m^2 (see _LN_INPLANE_DEG).
    "silicon_dioxide": CrystalOrientation.identity(),
    "aluminum": CrystalOrientation.identity(),
}

# In-plane angle (deg) of the X-cut lithium niobate film realizing
# e'_11 = -4.00 C/m^2 in the device frame; solved from the rotated rank-3
# tensor with the shipped film constants and frozen here
# (scripts/make_material_data.py).
_LN_INPLANE_DEG = 193.5912


def _ln_orientation(psi_deg: float = _LN_INPLANE_DEG) -> CrystalOrientation:
    psi = math.radians(psi_deg)
    c, s = math.cos(psi), math.sin(psi)
    # device x in crystal YZ plane, device z along crystal X
    r = np.array([[0.0, c, s], [0.0, -s, c], [1.0, 0.0, 0.0]])
    return CrystalOrientation(r)


def builtin_library(oriented: bool = True) -> dict[str, MaterialRecord]:
    """Load the shipped material presets.

    With ``oriented=True`` (default) each record is rotated into the
    device frame used throughout the toolkit; otherwise crystal-frame
    tensors are returned as stored on disk.
    """
    lib: dict[str, MaterialRecord] = {}
    ddir = _data_dir()
    for f in sorted(ddir.glob("*.json")):
        m = load_material(f)
        lib[m.name] = m
    if not lib:
        raise MaterialError(f"no material data found in {ddir}")
    if oriented:
        for name, m in lib.items():
            if name == "lithium_niobate":
                lib[name] = rotate_material(m, _ln_orientation())
            elif name in _ORIENTATIONS:
                lib[name] = rotate_material(m, _ORIENTATIONS[name])
    return lib
