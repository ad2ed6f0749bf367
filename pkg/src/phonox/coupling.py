"""Opto- and electromechanical coupling rates from overlap integrals.

Moving-boundary and photoelastic optomechanical rates follow the
first-order perturbation integrals over interface displacement and
strain-induced permittivity change, with the mechanical field normalized
to its zero-point amplitude through U'_m = 2 omega_m^2 int rho |u|^2 dV.
The counter-propagating variant replaces |E_par|^2 -> (E_par)^2 (and the
same for D_perp), i.e. flips k -> -k for one optical field; phase
bookkeeping along the beam then makes per-cell contributions add
coherently when k_m = 2 k_o and cancel otherwise.

Interface normals come from the analytic cell geometry (ellipse walls,
beam side walls, top and substrate planes), not from the grid, and are
sampled on a sub-grid quadrature.

The electromechanical rate uses the static-capacitance normalization
U'_mu = 2 (C_IDT + C_mu) V_0^2 of the electrostatic drive simulation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import EPS0, HBAR, TWO_PI
from .discretize import Grid2D
from .eigensolve import ModeField
from .geometry import UnitCell
from .materials import MaterialRecord

VOIGT_YY = 1  # Voigt index of the yy component


class CouplingError(ValueError):
    """Raised for inconsistent field/geometry inputs."""


@dataclass
class InterfaceSet:
    """Quadrature points on material interfaces of one unit cell.

    Normals point from ``inner`` material into ``outer``; ``weight`` is
    the area element carried by each point (m^2, per cell).
    """

    points: np.ndarray  # (n, 3) x, y, z
    normals: np.ndarray  # (n, 3) unit vectors
    weights: np.ndarray  # (n,)
    eps_in: np.ndarray  # (n,) relative optical permittivity inside
    eps_out: np.ndarray  # (n,)

    def __add__(self, other: "InterfaceSet") -> "InterfaceSet":
        return InterfaceSet(
            np.vstack([self.points, other.points]),
            np.vstack([self.normals, other.normals]),
            np.concatenate([self.weights, other.weights]),
            np.concatenate([self.eps_in, other.eps_in]),
            np.concatenate([self.eps_out, other.eps_out]),
        )


def _segment(points, normals, weights, eps_in, eps_out):
    points = np.atleast_2d(points)
    n = len(points)
    return InterfaceSet(
        points=points,
        normals=np.atleast_2d(normals),
        weights=np.asarray(weights, dtype=float),
        eps_in=np.full(n, eps_in, dtype=float),
        eps_out=np.full(n, eps_out, dtype=float),
    )


def cell_interfaces(
    cell: UnitCell,
    materials: dict[str, MaterialRecord],
    substrate: str = "sapphire",
    n_theta: int = 96,
    n_long: int = 24,
    nz_per_layer: int = 3,
) -> InterfaceSet:
    """Interface quadrature for one cell: hole walls, beam side walls,
    top surface, and the film-substrate plane."""
    eps_of = lambda lab: float(materials[lab].permittivity_optical[1, 1]) if lab in materials else 1.0
    sets: list[InterfaceSet] = []
    z0 = 0.0
    a = cell.a
    for label, t in cell.stack:
        eps_m = eps_of(label)
        zs = z0 + (np.arange(nz_per_layer) + 0.5) * t / nz_per_layer
        # hole side wall: ellipse ring, normal pointing into the hole
        hx, hy = 0.5 * cell.h_x, 0.5 * cell.h_y
        th = (np.arange(n_theta) + 0.5) * 2 * math.pi / n_theta
        ex, ey = hx * np.cos(th), hy * np.sin(th)
        keep = np.abs(ex) <= 0.5 * a  # overlapping-ellipse regime clips at the cell edge
        keep &= np.abs(ey) <= 0.5 * cell.w
        if np.any(keep):
            exk, eyk = ex[keep], ey[keep]
            thk = th[keep]
            # outward-from-hole gradient of the implicit ellipse function
            gx, gy = exk / hx**2, eyk / hy**2
            gn = np.hypot(gx, gy)
            nx, ny = -gx / gn, -gy / gn  # into the hole (solid -> air)
            dl = 2 * math.pi / n_theta * np.hypot(hx * np.sin(thk), hy * np.cos(thk))
            for zq in zs:
                pts = np.column_stack([exk, eyk, np.full(exk.shape, zq)])
                nrm = np.column_stack([nx, ny, np.zeros_like(nx)])
                sets.append(
                    _segment(pts, nrm, dl * t / nz_per_layer, eps_m, 1.0)
                )
        # beam side walls
        xs = (np.arange(n_long) + 0.5) * a / n_long - 0.5 * a
        for sgn in (+1.0, -1.0):
            for zq in zs:
                pts = np.column_stack(
                    [xs, np.full(xs.shape, sgn * 0.5 * cell.w), np.full(xs.shape, zq)]
                )
                nrm = np.tile([0.0, sgn, 0.0], (len(xs), 1))
                sets.append(_segment(pts, nrm, np.full(len(xs), a / n_long * t / nz_per_layer), eps_m, 1.0))
        z0 += t

    # top surface and substrate plane: (x, y) grids excluding the hole
    xs = (np.arange(n_long) + 0.5) * a / n_long - 0.5 * a
    yq = (np.arange(n_long) + 0.5) * cell.w / n_long - 0.5 * cell.w
    xg, yg = np.meshgrid(xs, yq, indexing="ij")
    inside = (xg / (0.5 * cell.h_x)) ** 2 + (yg / (0.5 * cell.h_y)) ** 2 < 1.0
    solid = ~inside
    w_area = (a / n_long) * (cell.w / n_long)
    top_label = cell.stack[-1][0]
    pts = np.column_stack([xg[solid], yg[solid], np.full(solid.sum(), z0)])
    nrm = np.tile([0.0, 0.0, 1.0], (solid.sum(), 1))
    sets.append(_segment(pts, nrm, np.full(solid.sum(), w_area), eps_of(top_label), 1.0))

    bot_label = cell.stack[0][0]
    pts = np.column_stack([xg[solid], yg[solid], np.zeros(solid.sum())])
    nrm = np.tile([0.0, 0.0, -1.0], (solid.sum(), 1))
    sets.append(
        _segment(pts, nrm, np.full(solid.sum(), w_area), eps_of(bot_label), eps_of(substrate))
    )

    total = sets[0]
    for s in sets[1:]:
        total = total + s
    return total


def _bilinear(grid: Grid2D, arr: np.ndarray, yq: np.ndarray, zq: np.ndarray) -> np.ndarray:
    """Bilinear sample of a node array at query points (clamped)."""
    ys, zs = grid.ys, grid.zs
    fy = np.clip((yq - ys[0]) / grid.dy, 0, len(ys) - 1 - 1e-9)
    fz = np.clip((zq - zs[0]) / grid.dz, 0, len(zs) - 1 - 1e-9)
    iy = fy.astype(int)
    iz = fz.astype(int)
    ty = fy - iy
    tz = fz - iz
    v00 = arr[iy, iz]
    v10 = arr[iy + 1, iz]
    v01 = arr[iy, iz + 1]
    v11 = arr[iy + 1, iz + 1]
    return (
        v00 * (1 - ty) * (1 - tz)
        + v10 * ty * (1 - tz)
        + v01 * (1 - ty) * tz
        + v11 * ty * tz
    )


def g_field(opt: ModeField) -> np.ndarray:
    try:
        return opt.fields["E"]
    except KeyError:
        raise CouplingError("optical mode lacks an 'E' field") from None


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def area_integral(grid: Grid2D, arr: np.ndarray):
    """Trapezoid-rule integral of a node array over the cross-section."""
    return _trapezoid(_trapezoid(arr, dx=grid.dz, axis=1), dx=grid.dy, axis=0)


def mech_mass_integral(mech: ModeField, materials: dict[str, MaterialRecord]) -> float:
    """int rho |u|^2 dA per unit length from the stored fields."""
    g = mech.grid
    rho = np.zeros(g.shape)
    for lab in np.unique(g.labels):
        if lab == "air" or lab not in materials:
            continue
        mask = g.labels == lab
        rho[mask] = materials[lab].density
    rho = rho * g.fill
    w = np.zeros(g.shape)
    for comp in ("ux", "uy", "uz"):
        if comp in mech.fields:
            w = w + np.abs(mech.fields[comp]) ** 2
    return float(area_integral(g, rho * w))


def phase_sum(delta_k: float, a: float, n_cells: int) -> complex:
    """Sum of per-cell phase factors exp(i delta_k a m)."""
    return complex(sum(np.exp(1j * delta_k * a * m) for m in range(n_cells)))


def _mech_at(mech: ModeField, pts: np.ndarray) -> np.ndarray:
    g = mech.grid
    out = np.zeros((len(pts), 3), dtype=complex)
    for i, comp in enumerate(("ux", "uy", "uz")):
        if comp in mech.fields:
            out[:, i] = _bilinear(g, mech.fields[comp], pts[:, 1], pts[:, 2])
    return out


def g_om_moving_boundary(
    opt: ModeField,
    mech: ModeField,
    interfaces: InterfaceSet,
    materials: dict[str, MaterialRecord],
    propagation: str = "counter",
    n_cells: int = 1,
    cell_length: float | None = None,
    return_complex: bool = False,
):
    """Moving-boundary vacuum optomechanical rate (rad/s).

    Fields live on a common cross-section grid with Bloch phases
    exp(i k x); ``interfaces`` carries the per-cell boundary quadrature.
    ``propagation`` selects the co- or counter-propagating three-wave
    phase convention.
    """
    if propagation not in ("co", "counter"):
        raise CouplingError(f"unknown propagation {propagation!r}")
    if opt.grid is not mech.grid and opt.grid.shape != mech.grid.shape:
        raise CouplingError("optical and mechanical fields must share a grid")
    a = cell_length or (opt.grid.meta.get("cell").a if opt.grid.meta.get("cell") else None)
    if a is None:
        raise CouplingError("cell length unknown; pass cell_length")

    pts = interfaces.points
    nrm = interfaces.normals
    if len(pts) == 0:
        raise CouplingError("interface set is empty")

    E = _bilinear(opt.grid, g_field(opt), pts[:, 1], pts[:, 2])
    u = _mech_at(mech, pts)

    ny = nrm[:, 1]
    tang2 = 1.0 - ny**2  # scalar field polarized along y
    eps_i = interfaces.eps_in * EPS0
    eps_o = interfaces.eps_out * EPS0
    d_eps = eps_i - eps_o
    d_ieps = 1.0 / eps_i - 1.0 / eps_o

    u_n = np.einsum("pi,pi->p", u, nrm)

    k_o, k_m = opt.k, mech.k
    x = pts[:, 0]
    if propagation == "counter":
        e_par2 = E * E * tang2
        d_perp2 = (eps_i * E * ny) ** 2
        local_phase = np.exp(1j * (2.0 * k_o - k_m) * x)
        dk_cell = 2.0 * k_o - k_m
    else:
        e_par2 = np.abs(E) ** 2 * tang2
        d_perp2 = np.abs(eps_i * E * ny) ** 2
        local_phase = np.exp(-1j * k_m * x)
        dk_cell = -k_m

    num_cell = np.sum(
        interfaces.weights * np.conj(u_n) * (d_eps * e_par2 - d_ieps * d_perp2) * local_phase
    )
    num = num_cell * phase_sum(dk_cell, a, n_cells)

    i_rho = mech_mass_integral(mech, materials) * a * n_cells
    i_eps = optical_eps_integral(opt, materials) * a * n_cells

    w_m = float(np.real(mech.omega))
    w_o = float(np.real(opt.omega))
    g = math.sqrt(HBAR / (2.0 * w_m)) * (w_o / 2.0) * num / (math.sqrt(i_rho) * i_eps)
    return complex(g) if return_complex else abs(complex(g))


def optical_eps_integral(opt: ModeField, materials: dict[str, MaterialRecord]) -> float:
    """int eps |E|^2 dA per unit length (absolute permittivity, F/m units)."""
    g = opt.grid
    eps = np.ones(g.shape)
    for lab in np.unique(g.labels):
        if lab == "air" or lab not in materials:
            continue
        mask = g.labels == lab
        e_rel = float(materials[lab].permittivity_optical[1, 1])
        eps[mask] = 1.0 + (e_rel - 1.0) * g.fill[mask]
    return float(area_integral(g, eps * EPS0 * np.abs(g_field(opt)) ** 2))


def strain_fields(mech: ModeField) -> dict[str, np.ndarray]:
    """Engineering strain components from central differences of u."""
    g = mech.grid
    ux = mech.fields.get("ux", np.zeros(g.shape, complex))
    uy = mech.fields.get("uy", np.zeros(g.shape, complex))
    uz = mech.fields.get("uz", np.zeros(g.shape, complex))
    ik = 1j * mech.k
    dy, dz = g.ys, g.zs
    s = {
        "S1": ik * ux,
        "S2": np.gradient(uy, dy, axis=0),
        "S3": np.gradient(uz, dz, axis=1),
        "S4": np.gradient(uy, dz, axis=1) + np.gradient(uz, dy, axis=0),
        "S5": np.gradient(ux, dz, axis=1) + ik * uz,
        "S6": np.gradient(ux, dy, axis=0) + ik * uy,
    }
    return s


def g_om_photoelastic(
    opt: ModeField,
    mech: ModeField,
    materials: dict[str, MaterialRecord],
    propagation: str = "counter",
    n_cells: int = 1,
    cell_length: float | None = None,
    return_complex: bool = False,
):
    """Photoelastic vacuum optomechanical rate (rad/s).

    Volume integral of the strain-optic permittivity change against the
    optical intensity, zero-point normalized with the same co/counter
    phase convention as the moving-boundary term.
    """
    if propagation not in ("co", "counter"):
        raise CouplingError(f"unknown propagation {propagation!r}")
    g = opt.grid
    a = cell_length or (g.meta.get("cell").a if g.meta.get("cell") else None)
    if a is None:
        raise CouplingError("cell length unknown; pass cell_length")
    E = g_field(opt)
    S = strain_fields(mech)
    strain = np.stack([S["S1"], S["S2"], S["S3"], S["S4"], S["S5"], S["S6"]])

    # delta(eps^-1)_yy = sum_J p[yy, J] S_J; delta eps_yy = -eps_yy^2 * that
    d_inv = np.zeros(g.shape, dtype=complex)
    eps_yy = np.ones(g.shape)
    for lab in np.unique(g.labels):
        if lab == "air" or lab not in materials:
            continue
        m = materials[lab]
        mask = g.labels == lab
        p_row = m.photoelastic[VOIGT_YY]
        contrib = np.tensordot(p_row, strain, axes=(0, 0))
        d_inv[mask] = contrib[mask]
        e_rel = float(m.permittivity_optical[1, 1])
        eps_yy[mask] = 1.0 + (e_rel - 1.0) * g.fill[mask]
    d_eps_yy = -(eps_yy**2) * d_inv * EPS0

    k_o, k_m = opt.k, mech.k
    if propagation == "counter":
        intensity = E * E
        dk_cell = 2.0 * k_o - k_m
    else:
        intensity = np.abs(E) ** 2
        dk_cell = -k_m
    # within a cell the cross-section profiles carry no x dependence, so
    # the per-cell x integral contributes a * sinc-type factor
    if abs(dk_cell) < 1e-12:
        x_factor = a
    else:
        x_factor = (np.exp(1j * dk_cell * a) - 1.0) / (1j * dk_cell)
    num_cell = area_integral(g, np.conj(d_eps_yy) * intensity) * x_factor
    num = num_cell * phase_sum(dk_cell, a, n_cells)

    i_rho = mech_mass_integral(mech, materials) * a * n_cells
    i_eps = optical_eps_integral(opt, materials) * a * n_cells
    w_m = float(np.real(mech.omega))
    w_o = float(np.real(opt.omega))
    gval = math.sqrt(HBAR / (2.0 * w_m)) * (w_o / 2.0) * num / (math.sqrt(i_rho) * i_eps)
    return complex(gval) if return_complex else abs(complex(gval))


@dataclass
class StaticField:
    """Electrostatic drive field mapped onto a mechanical cross-section grid."""

    grid: Grid2D
    e: dict[str, np.ndarray]  # components 'ex','ey','ez', complex amplitudes
    v0: float

    def vector(self, shape) -> np.ndarray:
        out = np.zeros((3,) + shape, dtype=complex)
        for i, c in enumerate(("ex", "ey", "ez")):
            if c in self.e:
                out[i] = self.e[c]
        return out


def g_em(
    mech: ModeField,
    e_static: StaticField,
    materials: dict[str, MaterialRecord],
    c_idt: float,
    c_mu: float,
    omega_mu: float,
    cell_length: float | None = None,
    n_cells: int = 1,
) -> float:
    """Electromechanical vacuum rate (rad/s), phase absorbed (real, >= 0).

    The piezoelectric displacement d_m = e : S of the mechanical mode is
    integrated against the conjugated static drive field; the drive
    normalization is U'_mu = 2 (C_IDT + C_mu) V_0^2.
    """
    if e_static.v0 == 0:
        raise CouplingError("electrostatic normalization undefined at V_0 = 0")
    g = mech.grid
    a = cell_length or (g.meta.get("cell").a if g.meta.get("cell") else None)
    if a is None:
        raise CouplingError("cell length unknown; pass cell_length")

    S = strain_fields(mech)
    strain = np.stack([S["S1"], S["S2"], S["S3"], S["S4"], S["S5"], S["S6"]])
    d_m = np.zeros((3,) + g.shape, dtype=complex)
    for lab in np.unique(g.labels):
        if lab == "air" or lab not in materials:
            continue
        m = materials[lab]
        if not m.is_piezoelectric:
            continue
        mask = g.labels == lab
        dm_lab = np.tensordot(m.piezo, strain, axes=(1, 0))  # (3, ny, nz)
        scale = g.fill[mask]
        for i in range(3):
            d_m[i][mask] = dm_lab[i][mask] * scale

    e_vec = e_static.vector(g.shape)
    overlap = sum(area_integral(g, np.conj(d_m[i]) * e_vec[i]) for i in range(3)) * a * n_cells

    u_m = 2.0 * float(np.real(mech.omega)) ** 2 * mech_mass_integral(mech, materials) * a * n_cells
    u_mu = 2.0 * (c_idt + c_mu) * e_static.v0**2
    w_m = float(np.real(mech.omega))
    return math.sqrt(omega_mu * w_m / (u_m * u_mu)) * abs(overlap)


def microwave_quantities(
    c_idt: float, c_mu: float, omega_mu: float, tan_delta_ln: float
) -> tuple[float, float]:
    """Microwave impedance and the LN-loss-limited linewidth.

    Z_mu = 1 / (omega_mu (C_IDT + C_mu));
    kappa_mu_LN = C_IDT/(C_IDT + C_mu) * omega_mu * tan(delta)_LN.
    """
    if c_idt <= 0 or c_mu <= 0 or omega_mu <= 0:
        raise CouplingError("capacitances and frequency must be positive")
    if tan_delta_ln < 0:
        raise CouplingError("loss tangent must be >= 0")
    z_mu = 1.0 / (omega_mu * (c_idt + c_mu))
    kappa = c_idt / (c_idt + c_mu) * omega_mu * tan_delta_ln
    return z_mu, kappa


@dataclass
class CouplingReport:
    """Coupling rates and microwave quantities for one device state."""

    g_om_mb: float
    g_om_pe: float
    g_om_total: float
    relative_phase: float  # phase angle between mb and pe contributions, rad
    g_em: float
    c_idt: float
    c_mu: float
    z_mu: float
    kappa_mu_ln: float
    propagation: str
    meta: dict = field(default_factory=dict)

    def to_json(self, path: str | None = None) -> str:
        d = {
            "g_om_mb_hz": self.g_om_mb / TWO_PI,
            "g_om_pe_hz": self.g_om_pe / TWO_PI,
            "g_om_total_hz": self.g_om_total / TWO_PI,
            "relative_phase_rad": self.relative_phase,
            "g_em_hz": self.g_em / TWO_PI,
            "c_idt_f": self.c_idt,
            "c_mu_f": self.c_mu,
            "z_mu_ohm": self.z_mu,
            "kappa_mu_ln_hz": self.kappa_mu_ln / TWO_PI,
            "propagation": self.propagation,
            "units": "rates are g/2pi in Hz; capacitances in F; impedance in ohm",
            **self.meta,
        }
        s = json.dumps(d, indent=1)
        if path:
            with open(path, "w") as fh:
                fh.write(s)
        return s


def combine_g_om(g_mb: complex, g_pe: complex) -> tuple[float, float]:
    """Total |g_mb + g_pe| under a consistent global phase, plus the
    relative phase angle between the two contributions."""
    tot = abs(g_mb + g_pe)
    if abs(g_mb) == 0 or abs(g_pe) == 0:
        return tot, 0.0
    rel = math.atan2(
        float(np.imag(g_pe * np.conj(g_mb))), float(np.real(g_pe * np.conj(g_mb)))
    )
    return tot, rel
