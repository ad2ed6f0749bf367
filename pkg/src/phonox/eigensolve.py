"""Sparse generalized eigensolver, band structures, radiative Q, and the
thin-strip surface-acoustic-wave model.

Eigenvalue problems are K(k) x = omega^2 M x.  Interior eigenvalues are
found by shift-invert (sparse LU + Arnoldi); the complex-symmetric path
is taken automatically when a PML makes K complex.  All public solves
enforce the residual bound ||K x - lam M x|| / ||lam M x|| < 1e-8 and
return mass-normalized fields.

Zone-edge (X-point) physics of the periodic patterning is recovered from
the x-averaged cross-section solution by a two-wave correction: the
degenerate +k/-k pair at k = pi/a is split by the first Fourier harmonic
of the hole modulation, giving band-edge frequencies, the band gap, and
the tight-binding hopping used by the envelope model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import C0, TWO_PI
from .discretize import (
    AIR,
    BCSpec,
    Grid2D,
    OperatorPair,
    PMLProfile,
    assemble_elastic,
    assemble_optical,
    cell_cross_section,
    saw_strip,
)
from .geometry import UnitCell
from .materials import CrystalOrientation, MaterialRecord, rotate_material, voigt_to_full4

RESIDUAL_TOL = 1e-8


class SolverError(RuntimeError):
    """Eigensolver failure; carries the best residual reached."""

    def __init__(self, msg: str, best_residual: float | None = None):
        super().__init__(msg)
        self.best_residual = best_residual


@dataclass
class ModeField:
    """One discretized eigenmode.

    ``fields`` maps component names to (ny, nz) complex node arrays.
    Fields are mass-normalized: x^H M x = 1, i.e. the per-unit-length
    integral int rho |u|^2 dA (elastic) or int eps_r |E|^2 / c^2 dA
    (optical) equals one.
    """

    omega: complex
    k: float
    fields: dict[str, np.ndarray]
    grid: Grid2D | None = None
    kind: str = ""
    residual: float = 0.0
    normalization: dict = field(default_factory=dict)

    @property
    def frequency_hz(self) -> float:
        return float(np.real(self.omega)) / TWO_PI

    def energy_weights(self) -> np.ndarray:
        """Nodal |field|^2 weights (mass-metric density)."""
        total = None
        for name, arr in self.fields.items():
            w = np.abs(arr) ** 2
            total = w if total is None else total + w
        return total


def radiative_q(mode: ModeField) -> float:
    """Radiation-limited quality factor Q = Re(omega) / (2 |Im(omega)|)."""
    im = float(np.imag(mode.omega))
    re = float(np.real(mode.omega))
    if im == 0.0:
        return math.inf
    return re / (2.0 * abs(im))


def _sqrt_decaying(lam: complex) -> complex:
    """omega = sqrt(lam) with Re >= 0; decay convention Im(omega) <= 0."""
    w = np.sqrt(complex(lam))
    if w.real < 0:
        w = -w
    if w.imag > 0 and abs(w.imag) > 1e-12 * abs(w.real):
        w = w.conjugate()
    return complex(w)


def _residuals(K, M, lams, vecs):
    # ||K x - lam M x|| / ||lam M x||, with a spectral-scale floor on the
    # denominator so rigid-body (lam ~ 0) modes do not divide by zero
    kscale = float(np.abs(K.diagonal()).max())
    res = np.empty(len(lams))
    for i, lam in enumerate(lams):
        x = vecs[:, i]
        num = np.linalg.norm(K @ x - lam * (M @ x))
        den = max(np.linalg.norm(lam * (M @ x)), kscale * np.linalg.norm(x))
        res[i] = num / den
    return res


def _centroid(mode_vec, ops: OperatorPair):
    if ops.grid is None:
        return (0.0, 0.0)
    w = np.abs(mode_vec) ** 2
    ys = ops.grid.ys[ops.dof_node // len(ops.grid.zs)]
    zs = ops.grid.zs[ops.dof_node % len(ops.grid.zs)]
    tot = w.sum()
    if tot == 0:
        return (0.0, 0.0)
    return (float((w * ys).sum() / tot), float((w * zs).sum() / tot))


def solve_modes(ops: OperatorPair, n: int, target: float) -> list[ModeField]:
    """``n`` eigenpairs nearest the target angular frequency.

    Internally shift-inverts at sigma = target^2 (sign preserved for
    negative diagnostics targets).  Degenerate ordering is made
    deterministic by sorting on (distance to target, Re omega, field
    centroid).
    """
    sigma = target * abs(target)
    K, M = ops.K, ops.M
    ndof = K.shape[0]
    if n < 1:
        raise ValueError("need n >= 1 modes")
    guard = max(4, n // 2)
    dense = ndof <= max(300, 2 * (n + guard) + 2)
    try:
        if dense:
            lams, vecs = la.eig(K.toarray(), M.toarray())
        else:
            # request extra pairs: the outermost Ritz pairs converge last
            lams, vecs = spla.eigs(K, k=n + guard, M=M, sigma=sigma, which="LM")
    except spla.ArpackNoConvergence as err:
        got = len(err.eigenvalues)
        best = None
        if got:
            best = float(np.min(_residuals(K, M, err.eigenvalues, err.eigenvectors)))
        raise SolverError(
            f"eigensolver converged only {got}/{n} modes", best_residual=best
        ) from err

    order = np.argsort(np.abs(lams - sigma))
    lams = lams[order][:n]
    vecs = vecs[:, order][:, :n]

    res = _residuals(K, M, lams, vecs)
    bad = res > RESIDUAL_TOL
    if np.any(bad):
        raise SolverError(
            f"residual bound violated: max {res.max():.2e}", best_residual=float(res.min())
        )

    modes = []
    for i in range(len(lams)):
        x = vecs[:, i]
        nrm = np.sqrt(abs(np.vdot(x, M @ x)))
        x = x / nrm
        # deterministic global phase: largest-|.| entry made real positive
        j = int(np.argmax(np.abs(x)))
        phase = x[j] / abs(x[j])
        x = x / phase
        omega = _sqrt_decaying(lams[i])
        cy, cz = _centroid(x, ops)
        modes.append(
            (
                abs(lams[i] - sigma),
                omega.real,
                cz,
                cy,
                ModeField(
                    omega=omega,
                    k=ops.k,
                    fields=ops.field_arrays(x) if ops.grid is not None else {"x": x},
                    grid=ops.grid,
                    kind=ops.kind,
                    residual=float(res[i]),
                    normalization={"mass_integral": 1.0},
                ),
            )
        )
    modes.sort(key=lambda t: (t[0], t[1], t[2], t[3]))
    return [m[-1] for m in modes]


def lowest_modes(ops: OperatorPair, n: int, floor_omega: float | None = None) -> list[ModeField]:
    """Lowest-frequency modes.

    Shift-inverts just below the spectrum: for optical operators the
    Rayleigh-quotient bound omega >= c k / n_max provides a sharp shift;
    elastic spectra start near zero.  ``floor_omega`` overrides the
    estimate.
    """
    K, M = ops.K, ops.M
    if floor_omega is not None:
        sig = 0.98 * floor_omega * abs(floor_omega)
    elif ops.kind == "optical" and ops.meta.get("eps_max"):
        w0 = C0 * abs(ops.k) / math.sqrt(ops.meta["eps_max"])
        sig = 0.98 * w0 * w0
    else:
        scale = np.abs(K.diagonal()).mean() / max(np.abs(M.diagonal()).mean(), 1e-300)
        sig = -1e-6 * scale
    ndof = K.shape[0]
    guard = max(4, n // 2)
    if ndof <= max(300, 2 * (n + guard) + 2):
        lams, vecs = la.eig(K.toarray(), M.toarray())
    else:
        ncv = min(ndof - 1, max(2 * (n + guard) + 1, 36))
        lams, vecs = spla.eigs(K, k=n + guard, M=M, sigma=sig, which="LM", ncv=ncv)
    order = np.argsort(np.real(lams))
    lams = lams[order][:n]
    vecs = vecs[:, order][:, :n]
    res = _residuals(K, M, lams, vecs)
    if np.any(res > RESIDUAL_TOL):
        raise SolverError(f"residual bound violated: max {res.max():.2e}")
    out = []
    for i in range(len(lams)):
        x = vecs[:, i]
        nrm = np.sqrt(abs(np.vdot(x, M @ x)))
        x = x / nrm
        j = int(np.argmax(np.abs(x)))
        x = x / (x[j] / abs(x[j]))
        out.append(
            ModeField(
                omega=_sqrt_decaying(lams[i]),
                k=ops.k,
                fields=ops.field_arrays(x) if ops.grid is not None else {"x": x},
                grid=ops.grid,
                kind=ops.kind,
                residual=float(res[i]),
                normalization={"mass_integral": 1.0},
            )
        )
    out.sort(key=lambda m: m.omega.real)
    return out


def christoffel_velocities(material: MaterialRecord, direction) -> np.ndarray:
    """Bulk phase velocities (sorted ascending, m/s) along a unit direction."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    c4 = voigt_to_full4(material.stiffness)
    gamma = np.einsum("ijkl,j,l->ik", c4, n, n)
    vals = np.linalg.eigvalsh(gamma) / material.density
    return np.sqrt(np.clip(vals, 0.0, None))


def device_fraction(mode: ModeField) -> float:
    """Fraction of the mode's mass-metric energy above the substrate (z > 0)."""
    g = mode.grid
    w = mode.energy_weights()
    above = g.zs > 1e-15
    tot = w.sum()
    return float(w[:, above].sum() / tot) if tot > 0 else 0.0


# ---------------------------------------------------------------------------
# band structures

@dataclass
class BandTable:
    """Branch frequencies over a k list, plus the substrate sound line."""

    k: np.ndarray
    omegas: np.ndarray  # (nk, nb) complex, sorted by Re per k
    sound_velocity: float
    kind: str
    meta: dict = field(default_factory=dict)

    def sound_line(self) -> np.ndarray:
        return self.sound_velocity * self.k

    def to_csv(self, path: str):
        with open(path, "w") as fh:
            fh.write("k_rad_per_m,branch,omega_re_rad_per_s,omega_im_rad_per_s\n")
            for i, kv in enumerate(self.k):
                for b in range(self.omegas.shape[1]):
                    w = self.omegas[i, b]
                    fh.write(f"{kv:.9e},{b},{np.real(w):.9e},{np.imag(w):.9e}\n")


def substrate_sound_velocity(material: MaterialRecord) -> float:
    """Cheap estimate of the substrate surface-wave velocity: 0.93 x the
    slowest bulk shear branch along the beam axis."""
    v = christoffel_velocities(material, [1.0, 0.0, 0.0])
    return 0.93 * float(v[0])


def _assemble(kind, grid, materials, k, pml, bc):
    if kind == "mechanical":
        return assemble_elastic(grid, materials, k, pml=pml, bc=bc)
    if kind == "optical":
        return assemble_optical(grid, materials, k, pml=pml, bc=bc)
    raise ValueError(f"unknown physics {kind!r}")


def band_structure(
    cell,
    k_list,
    materials: dict[str, MaterialRecord],
    physics: str = "mechanical",
    n_branches: int = 4,
    spacing: float = 25e-9,
    bc: BCSpec | None = None,
    pml: PMLProfile | None = None,
    sound_velocity: float | None = None,
    substrate: str = "sapphire",
) -> BandTable:
    """Branch frequencies of one unit cell over ``k_list``.

    ``cell`` may be a :class:`UnitCell` (a cross-section grid is built)
    or a prepared :class:`Grid2D`.  The substrate sound line
    omega = v_substrate k is attached for confinement assessment.
    """
    if isinstance(cell, UnitCell):
        grid = cell_cross_section(cell, spacing=spacing, substrate=substrate)
    else:
        grid = cell
    if sound_velocity is None:
        sub = grid.meta.get("substrate", substrate)
        sound_velocity = (
            substrate_sound_velocity(materials[sub]) if sub in materials else 0.0
        )
    rows = []
    for k in k_list:
        ops = _assemble(physics, grid, materials, float(k), pml, bc)
        modes = lowest_modes(ops, n_branches)
        rows.append([m.omega for m in modes])
    return BandTable(
        k=np.asarray(k_list, dtype=float),
        omegas=np.array(rows),
        sound_velocity=sound_velocity,
        kind=physics,
        meta={"cell": cell if isinstance(cell, UnitCell) else None},
    )


# ---------------------------------------------------------------------------
# zone-edge (X point) two-wave data

@dataclass
class ZoneEdgeData:
    """X-point band data of one cell for the envelope chain."""

    omega_edge: float  # lower gap edge, rad/s
    omega_upper: float
    gap: float
    hopping: float  # tight-binding hopping (positive: band max at X)
    omega_unsplit: float
    loss_rate: float  # 2|Im omega| of the branch (0 without PML)
    mode: ModeField


def _harmonic_matrices(grid: Grid2D, materials, ops: OperatorPair, physics: str):
    """First-harmonic perturbation matrices (dK1, dM1) on the kept dofs."""
    from .discretize import (
        _element_table,
        _elastic_B,
        _grad_B,
        _shape_N,
        _scatter,
    )

    fill1 = grid.meta.get("fill1")
    if fill1 is None:
        return None, None
    bc = ops.meta.get("bc") or BCSpec()
    elems = _element_table(grid, bc)
    ny, nz = grid.shape
    nnode = ny * nz
    jac = 0.25 * grid.dy * grid.dz
    Ng = _shape_N(grid.dy, grid.dz)

    if physics == "mechanical":
        Bg = _elastic_B(ops.k, grid.dy, grid.dz)
        rho1, c1_list, enodes = [], [], []
        for corners in elems:
            r1 = 0.0
            c1 = np.zeros((6, 6))
            solid = False
            for jy, jz in corners:
                lab = grid.labels[jy, jz]
                if lab == AIR:
                    continue
                f1 = fill1[jy, jz]
                f0 = grid.fill[jy, jz]
                m = materials[lab]
                solid = True
                r1 += 0.25 * m.density * f1
                c1 += 0.25 * m.stiffness * 2.0 * f0 * f1
            if not solid:
                continue
            rho1.append(r1)
            c1_list.append(c1)
            enodes.append([grid.node_index(jy, jz) for jy, jz in corners])
        if not enodes:
            return None, None
        enodes = np.array(enodes)
        udofs = (enodes[:, :, None] * 3 + np.arange(3)[None, None, :]).reshape(len(enodes), 12)
        C1 = np.array(c1_list)
        R1 = np.array(rho1)
        dK = np.zeros((len(enodes), 12, 12), dtype=complex)
        dM = np.zeros((len(enodes), 12, 12))
        for b, nsh in zip(Bg, Ng):
            # plain transpose: matrix element between conj(u) at -k and u at +k
            dK += jac * np.einsum("ki,ekl,lj->eij", b, C1, b, optimize=True)
            m12 = np.kron(np.outer(nsh, nsh), np.eye(3))
            dM += jac * R1[:, None, None] * m12[None, :, :]
        dK_g = _scatter(3 * nnode, udofs, dK)
        dM_g = _scatter(3 * nnode, udofs, dM.astype(complex))
        dof_global = ops.dof_node * 3 + np.array(
            [{"ux": 0, "uy": 1, "uz": 2}[c] for c in ops.dof_comp]
        )
        return dK_g[dof_global][:, dof_global], dM_g[dof_global][:, dof_global]

    # optical: modulation lives in the permittivity (mass side)
    from .constants import C0

    eps1, enodes = [], []
    for corners in elems:
        e1 = 0.0
        for jy, jz in corners:
            lab = grid.labels[jy, jz]
            if lab == AIR:
                continue
            m = materials[lab]
            e1 += 0.25 * (m.permittivity_optical[1, 1] - 1.0) * fill1[jy, jz]
        eps1.append(e1)
        enodes.append([grid.node_index(jy, jz) for jy, jz in corners])
    enodes = np.array(enodes)
    E1 = np.array(eps1)
    dM = np.zeros((len(enodes), 4, 4))
    for nsh in Ng:
        dM += jac * np.outer(nsh, nsh)[None, :, :] * E1[:, None, None] / C0**2
    dM_g = _scatter(ny * nz, enodes, dM.astype(complex))
    dM_r = dM_g[ops.dof_node][:, ops.dof_node]
    dK_r = sp.csr_matrix(dM_r.shape, dtype=complex)
    return dK_r, dM_r


def _pick_device_branch(modes, min_fraction=0.25):
    fracs = [device_fraction(m) for m in modes]
    best = int(np.argmax(fracs))
    return best, fracs[best]


def zone_edge(
    cell: UnitCell,
    materials: dict[str, MaterialRecord],
    physics: str = "mechanical",
    n_branches: int = 6,
    spacing: float = 25e-9,
    substrate: str = "sapphire",
    pml: PMLProfile | None = None,
    bc: BCSpec | None = None,
    branch_picker=_pick_device_branch,
) -> ZoneEdgeData:
    """X-point band edges, gap, hopping and loss for one cell.

    The device branch is the most surface-localized branch at k = pi/a.
    The gap is the two-wave splitting induced by the first Fourier
    harmonic of the hole modulation; hopping follows from a parabolic
    fit of the corrected lower branch near the edge.
    """
    grid = cell_cross_section(cell, spacing=spacing, substrate=substrate)
    k_edge = math.pi / cell.a
    ops = _assemble(physics, grid, materials, k_edge, pml, bc)
    modes = lowest_modes(ops, n_branches)
    idx, frac = branch_picker(modes)
    mode = modes[idx]
    lam0 = mode.omega**2

    dK1, dM1 = _harmonic_matrices(grid, materials, ops, physics)
    if dK1 is None:
        kappa_lam = 0.0
    else:
        x = _vector_of(mode, ops)
        kappa_lam = abs(x.T @ (dK1 @ x) - lam0 * (x.T @ (dM1 @ x)))

    lam_lo = lam0 - kappa_lam
    lam_hi = lam0 + kappa_lam
    w_lo = _sqrt_decaying(lam_lo)
    w_hi = _sqrt_decaying(lam_hi)

    # parabolic hopping fit on the corrected lower branch: couple the
    # waveguide branch at k2 with its folded partner at 2 pi/a - k2
    k2 = 0.9 * k_edge
    ops2 = _assemble(physics, grid, materials, k2, pml, bc)
    modes2 = lowest_modes(ops2, n_branches)
    j2 = _match_branch(mode, modes2, ops, ops2)
    k2p = 2.0 * k_edge - k2
    ops3 = _assemble(physics, grid, materials, k2p, pml, bc)
    modes3 = lowest_modes(ops3, n_branches)
    j3 = _match_branch(mode, modes3, ops, ops3)
    lam_a = float(np.real(modes2[j2].omega ** 2))
    lam_b = float(np.real(modes3[j3].omega ** 2))
    half = 0.5 * (lam_a + lam_b)
    dlt = 0.5 * (lam_a - lam_b)
    lam_lo_k2 = half - math.sqrt(dlt**2 + float(np.real(kappa_lam)) ** 2)
    w_lo_k2 = _sqrt_decaying(lam_lo_k2)
    dk = k_edge - k2
    # omega(X - dk) = omega_X - t (dk a)^2
    t_hop = float(np.real(w_lo) - np.real(w_lo_k2)) / (dk * cell.a) ** 2
    loss = 2.0 * abs(float(np.imag(mode.omega)))
    return ZoneEdgeData(
        omega_edge=float(np.real(w_lo)),
        omega_upper=float(np.real(w_hi)),
        gap=float(np.real(w_hi) - np.real(w_lo)),
        hopping=t_hop,
        omega_unsplit=float(np.real(mode.omega)),
        loss_rate=loss,
        mode=mode,
    )


def _vector_of(mode: ModeField, ops: OperatorPair) -> np.ndarray:
    nz = len(ops.grid.zs)
    x = np.empty(ops.ndof, dtype=complex)
    for i, (node, comp) in enumerate(zip(ops.dof_node, ops.dof_comp)):
        x[i] = mode.fields[str(comp)][node // nz, node % nz]
    return x


def _match_branch(ref: ModeField, candidates, ops_ref, ops_c):
    xr = _vector_of(ref, ops_ref)
    best, best_ov = 0, -1.0
    for j, m in enumerate(candidates):
        xc = _vector_of(m, ops_c)
        ov = abs(np.vdot(xr, ops_ref.M @ xc)) if ops_ref.ndof == ops_c.ndof else 0.0
        if ov > best_ov:
            best, best_ov = j, ov
    return best


# ---------------------------------------------------------------------------
# surface acoustic waves

@dataclass
class SawResult:
    velocity: float
    mode: ModeField
    classification: str  # 'rayleigh-like' or 'bulk-like'
    localization_depth: float
    bulk_velocities: np.ndarray


def saw_mode(
    material: MaterialRecord,
    alpha: float,
    k: float,
    depth_wavelengths: float = 3.0,
    nodes_per_wavelength: int = 60,
    n_search: int = 6,
) -> SawResult:
    """Lowest surface branch of a deep thin substrate strip.

    The strip is periodic across its 10 nm width (plane-strain exact for
    straight wavefronts), traction-free at the surface and fixed at the
    bottom, with the material rotated in-plane by ``alpha``.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    rot = rotate_material(material, CrystalOrientation.about_axis("z", alpha))
    label = rot.name or "substrate"
    lam = TWO_PI / k
    grid = saw_strip(label, lam, depth_wavelengths, nodes_per_wavelength)
    mats = {label: rot}
    bc = BCSpec(ymin="periodic", ymax="periodic", zmin="fixed", zmax="free")
    ops = assemble_elastic(grid, mats, k, bc=bc)
    vbulk = christoffel_velocities(rot, [1.0, 0.0, 0.0])
    target = 0.85 * vbulk[0] * k
    modes = solve_modes(ops, n_search, target)
    modes = [m for m in modes if np.real(m.omega) > 1e-3 * vbulk[0] * k]
    modes.sort(key=lambda m: np.real(m.omega))
    if not modes:
        raise SolverError("no propagating branch found")
    mode = modes[0]
    v = float(np.real(mode.omega)) / k

    if v > 1.05 * float(vbulk[-1]):
        raise SolverError(
            f"no surface-confined branch below the bulk line: v = {v:.0f} m/s "
            f"vs slowest bulk {vbulk[0]:.0f} m/s"
        )

    w = mode.energy_weights().sum(axis=0)
    depth = float((w * np.abs(grid.zs)).sum() / w.sum())
    classification = "rayleigh-like" if depth <= 0.5 * lam else "bulk-like"
    return SawResult(
        velocity=v,
        mode=mode,
        classification=classification,
        localization_depth=depth,
        bulk_velocities=vbulk,
    )


def saw_velocity(material: MaterialRecord, alpha: float, k: float, **kw) -> float:
    """Sound velocity of the lowest substrate branch at in-plane angle alpha."""
    return saw_mode(material, alpha, k, **kw).velocity
