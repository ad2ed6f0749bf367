"""Structured cross-section grids, PML profiles, and sparse operator assembly.

The solvers are two-dimensional: a cross-section in the (y, z) plane with
a Bloch phase factor exp(i k x) along the beam axis.  Periodic patterning
along x is reduced to per-node longitudinal fill factors (x-averaged
material dilution); zone-edge physics is recovered by the two-wave
correction in :mod:`phonox.eigensolve`.

Assembly uses bilinear rectangular elements with 2x2 Gauss quadrature on
a uniform grid, which realizes a second-order difference scheme with
cell-centered material sampling.  Mass matrices are always real symmetric
positive definite; stiffness matrices are Hermitian without PML.

PML convention: the attenuation profile f(r) enters as a complex "sponge"
factor s = 1 + i f(r) dividing the stiffness-like coefficients (elastic
stiffness tensor, optical curvature + k^2 terms) by s^2.  Locally this
scales the wave speed by 1/s, i.e. gives the refractive index (density)
an imaginary part proportional to f times its real part, while keeping
the mass matrix real.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import C0, EPS0
from .geometry import UnitCell
from .materials import MaterialRecord, voigt_to_full3

AIR = "air"


class AssemblyError(ValueError):
    """Raised for invalid grids, boundary conditions or material maps."""


@dataclass(frozen=True)
class PMLProfile:
    """Exponential attenuation profile for the absorbing layer.

    f(r) = A (exp((r - R_start)/R_0) - 1) for r > R_start, else 0,
    with r the distance from the domain core (beam center).
    """

    A: float = 1.0
    R_start: float = 2.0e-6
    R_0: float = 0.5e-6
    R_sim: float = 4.0e-6
    target: str = "mechanical"

    def __post_init__(self):
        if not (0 < self.R_start < self.R_sim):
            raise AssemblyError("require 0 < R_start < R_sim")
        if self.R_0 <= 0:
            raise AssemblyError("R_0 must be positive")
        if self.A < 0:
            raise AssemblyError("A must be >= 0")


def pml_value(r: float, p: PMLProfile) -> float:
    """Attenuation f(r); exactly zero up to R_start."""
    if r <= p.R_start:
        return 0.0
    return p.A * (math.exp((r - p.R_start) / p.R_0) - 1.0)


@dataclass
class Grid2D:
    """Uniform structured grid over a (y, z) rectangle.

    ``labels`` holds a per-node material label (``"air"`` marks void);
    ``fill`` the per-node longitudinal material fraction in [0, 1]
    (1 = solid, smaller values encode the x-averaged hole dilution).
    """

    ys: np.ndarray
    zs: np.ndarray
    labels: np.ndarray  # (ny, nz) of str
    fill: np.ndarray  # (ny, nz) float
    core: tuple[float, float] = (0.0, 0.0)  # PML distance reference point
    electrode_nodes: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ys = np.asarray(self.ys, dtype=float)
        self.zs = np.asarray(self.zs, dtype=float)
        ny, nz = self.shape
        if self.labels.shape != (ny, nz) or self.fill.shape != (ny, nz):
            raise AssemblyError("labels/fill must match the node grid shape")
        if ny < 2 or nz < 2:
            raise AssemblyError("grid needs at least 2 nodes per direction")
        dy = np.diff(self.ys)
        dz = np.diff(self.zs)
        if np.any(dy <= 0) or np.any(dz <= 0):
            raise AssemblyError("grid spacings must be positive")
        if not (np.allclose(dy, dy[0]) and np.allclose(dz, dz[0])):
            raise AssemblyError("grid must be uniform")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.ys), len(self.zs)

    @property
    def dy(self) -> float:
        return float(self.ys[1] - self.ys[0])

    @property
    def dz(self) -> float:
        return float(self.zs[1] - self.zs[0])

    def node_index(self, iy: int, iz: int) -> int:
        return iy * len(self.zs) + iz

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        yy, zz = np.meshgrid(self.ys, self.zs, indexing="ij")
        return yy, zz


@dataclass
class OperatorPair:
    """Generalized eigenproblem K(k) x = omega^2 M x plus bookkeeping."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    dof_node: np.ndarray
    dof_comp: np.ndarray  # component names per dof ('ux','uy','uz','E','phi')
    grid: Grid2D | None = None
    k: float = 0.0
    kind: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def ndof(self) -> int:
        return self.K.shape[0]

    def field_arrays(self, x: np.ndarray) -> dict[str, np.ndarray]:
        """Scatter a solution vector back onto the node grid per component."""
        if self.grid is None:
            raise AssemblyError("operator has no grid attached")
        ny, nz = self.grid.shape
        out: dict[str, np.ndarray] = {}
        for comp in np.unique(self.dof_comp):
            arr = np.zeros((ny, nz), dtype=complex)
            sel = self.dof_comp == comp
            nodes = self.dof_node[sel]
            arr[nodes // nz, nodes % nz] = x[sel]
            out[str(comp)] = arr
        return out


def dump_operators(ops: OperatorPair, path: str):
    """Write K and M in a plain triplet text format (row col re im)."""
    with open(path, "w") as fh:
        for name, mat in (("K", ops.K.tocoo()), ("M", ops.M.tocoo())):
            fh.write(f"# {name} {mat.shape[0]} {mat.shape[1]} {mat.nnz}\n")
            for r, c, v in zip(mat.row, mat.col, mat.data):
                fh.write(f"{r} {c} {np.real(v):.17e} {np.imag(v):.17e}\n")


# ---------------------------------------------------------------------------
# element machinery

_GAUSS = [(-1 / math.sqrt(3), -1 / math.sqrt(3)), (1 / math.sqrt(3), -1 / math.sqrt(3)),
          (1 / math.sqrt(3), 1 / math.sqrt(3)), (-1 / math.sqrt(3), 1 / math.sqrt(3))]
# local node order: (0,0), (1,0), (1,1), (0,1) in (y, z) offsets
_LOCAL = [(0, 0), (1, 0), (1, 1), (0, 1)]


def _shape_funcs(xi: float, eta: float):
    n = np.array([
        0.25 * (1 - xi) * (1 - eta),
        0.25 * (1 + xi) * (1 - eta),
        0.25 * (1 + xi) * (1 + eta),
        0.25 * (1 - xi) * (1 + eta),
    ])
    dxi = np.array([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)]) * 0.25
    deta = np.array([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)]) * 0.25
    return n, dxi, deta


def _elastic_B(k: float, dy: float, dz: float):
    """Strain-displacement matrices (6 x 12) at the four Gauss points."""
    mats = []
    for xi, eta in _GAUSS:
        n, dxi, deta = _shape_funcs(xi, eta)
        dndy = dxi * 2.0 / dy
        dndz = deta * 2.0 / dz
        b = np.zeros((6, 12), dtype=complex)
        ik = 1j * k
        for a in range(4):
            ux, uy, uz = 3 * a, 3 * a + 1, 3 * a + 2
            b[0, ux] = ik * n[a]
            b[1, uy] = dndy[a]
            b[2, uz] = dndz[a]
            b[3, uy] = dndz[a]
            b[3, uz] = dndy[a]
            b[4, ux] = dndz[a]
            b[4, uz] = ik * n[a]
            b[5, ux] = dndy[a]
            b[5, uy] = ik * n[a]
        mats.append(b)
    return mats


def _grad_B(k: float, dy: float, dz: float, bloch_row: bool):
    """Gradient matrices at Gauss points: (3 x 4) with ik row, or (2 x 4)."""
    mats = []
    for xi, eta in _GAUSS:
        n, dxi, deta = _shape_funcs(xi, eta)
        dndy = dxi * 2.0 / dy
        dndz = deta * 2.0 / dz
        if bloch_row:
            b = np.zeros((3, 4), dtype=complex)
            b[0] = 1j * k * n
            b[1] = dndy
            b[2] = dndz
        else:
            b = np.zeros((2, 4), dtype=float)
            b[0] = dndy
            b[1] = dndz
        mats.append(b)
    return mats


def _shape_N(dy: float, dz: float):
    return [_shape_funcs(xi, eta)[0] for xi, eta in _GAUSS]


@dataclass
class BCSpec:
    """Per-edge boundary conditions: 'free', 'fixed', or 'periodic'.

    Periodic edges must be requested on an axis as a pair (the ymin/ymax
    or zmin/zmax values are identified).
    """

    ymin: str = "free"
    ymax: str = "free"
    zmin: str = "free"
    zmax: str = "free"

    def __post_init__(self):
        for nm in ("ymin", "ymax", "zmin", "zmax"):
            v = getattr(self, nm)
            if v not in ("free", "fixed", "periodic"):
                raise AssemblyError(f"unknown boundary condition {v!r}")
        if (self.ymin == "periodic") != (self.ymax == "periodic"):
            raise AssemblyError("periodic y requires both ymin and ymax")
        if (self.zmin == "periodic") != (self.zmax == "periodic"):
            raise AssemblyError("periodic z requires both zmin and zmax")

    @property
    def periodic_y(self) -> bool:
        return self.ymin == "periodic"

    @property
    def periodic_z(self) -> bool:
        return self.zmin == "periodic"


def _element_table(grid: Grid2D, bc: BCSpec):
    """Element -> corner node ids, honoring periodic wrap elements."""
    ny, nz = grid.shape
    iy_count = ny if bc.periodic_y else ny - 1
    iz_count = nz if bc.periodic_z else nz - 1
    elems = []
    for iy in range(iy_count):
        for iz in range(iz_count):
            corners = []
            for oy, oz in _LOCAL:
                jy = (iy + oy) % ny
                jz = (iz + oz) % nz
                corners.append((jy, jz))
            elems.append(corners)
    return elems


def _element_material(grid: Grid2D, materials: dict[str, MaterialRecord], corners):
    """Averaged (rho, C, e, eps_s, eps_opt, fill) for one element; None if void."""
    rho = 0.0
    fill = 0.0
    c = np.zeros((6, 6))
    e = np.zeros((3, 6))
    eps_s = np.zeros((3, 3))
    eps_o = 0.0
    solid = 0
    for jy, jz in corners:
        lab = grid.labels[jy, jz]
        f = grid.fill[jy, jz]
        if lab == AIR or f <= 0.0:
            eps_s += 0.25 * EPS0 * np.eye(3)
            eps_o += 0.25
            continue
        m = materials[lab]
        solid += 1
        rho += 0.25 * m.density * f
        fill += 0.25 * f
        # stiffness penalized by fill^2: removing material softens the
        # structure faster than it loses mass (geometric softening)
        c += 0.25 * m.stiffness * f * f
        e += 0.25 * m.piezo * f
        eps_s += 0.25 * (m.permittivity_static * f + EPS0 * np.eye(3) * (1 - f))
        eps_o += 0.25 * (1.0 + (m.permittivity_optical[1, 1] - 1.0) * f)
    if solid == 0:
        return None
    return rho, c, e, eps_s, eps_o, fill


def _pml_factors(grid: Grid2D, elems, pml: PMLProfile | None):
    """Per-element complex sponge factor 1/s^2."""
    if pml is None:
        return np.ones(len(elems))
    ny, nz = grid.shape
    fac = np.empty(len(elems), dtype=complex)
    yc, zc = grid.core
    for i, corners in enumerate(elems):
        yy = np.mean([grid.ys[jy] for jy, _ in corners])
        zz = np.mean([grid.zs[jz] for _, jz in corners])
        r = math.hypot(yy - yc, zz - zc)
        s = 1.0 + 1j * pml_value(r, pml)
        fac[i] = 1.0 / (s * s)
    return fac


def _scatter(ndof_full, elem_dofs, elem_mats):
    rows = np.repeat(elem_dofs, elem_dofs.shape[1], axis=1).ravel()
    cols = np.tile(elem_dofs, (1, elem_dofs.shape[1])).ravel()
    vals = elem_mats.reshape(len(elem_dofs), -1).ravel()
    return sp.coo_matrix((vals, (rows, cols)), shape=(ndof_full, ndof_full)).tocsr()


def _apply_dirichlet(K, M, keep):
    return K[keep][:, keep].tocsr(), M[keep][:, keep].tocsr()


def assemble_elastic(
    grid: Grid2D,
    materials: dict[str, MaterialRecord],
    k: float,
    pml: PMLProfile | None = None,
    bc: BCSpec | None = None,
) -> OperatorPair:
    """Anisotropic (piezo)elastic operators for Bloch wavevector ``k``.

    Three displacement components per solid node.  Where piezoelectric
    material is present the quasi-static potential is assembled on the
    full dielectric grid and eliminated by a Schur complement, so K gains
    the piezoelectric stiffening while the returned problem stays in
    displacement space.  Grounded electrode nodes (grid.electrode_nodes)
    become phi = 0 constraints.
    """
    bc = bc or BCSpec()
    ny, nz = grid.shape
    nnode = ny * nz
    elems = _element_table(grid, bc)
    Bg = _elastic_B(k, grid.dy, grid.dz)
    Ng = _shape_N(grid.dy, grid.dz)
    Bphi = _grad_B(k, grid.dy, grid.dz, bloch_row=True)
    jac = 0.25 * grid.dy * grid.dz
    sponge = _pml_factors(grid, elems, pml)

    mats = []
    node_ids = []
    rho_list, c_list, e_list, eps_list = [], [], [], []
    for corners in elems:
        em = _element_material(grid, materials, corners)
        mats.append(em)
        node_ids.append([grid.node_index(jy, jz) for jy, jz in corners])

    has_piezo = False
    keep_elem = []
    for i, em in enumerate(mats):
        if em is None:
            continue
        keep_elem.append(i)
        rho_list.append(em[0])
        c_list.append(em[1])
        e_list.append(em[2])
        eps_list.append(em[3])
        if np.any(em[2] != 0.0):
            has_piezo = True
    if not keep_elem:
        raise AssemblyError("grid contains no solid material")

    ne = len(keep_elem)
    C_stack = np.array(c_list) * sponge[keep_elem][:, None, None]
    rho_arr = np.array(rho_list)
    enodes = np.array([node_ids[i] for i in keep_elem])  # (ne, 4)

    # displacement dofs: 3 per node
    udofs = (enodes[:, :, None] * 3 + np.arange(3)[None, None, :]).reshape(ne, 12)

    Ke = np.zeros((ne, 12, 12), dtype=complex)
    Me = np.zeros((ne, 12, 12))
    for b, n in zip(Bg, Ng):
        Ke += jac * np.einsum("ki,ekl,lj->eij", b.conj(), C_stack, b, optimize=True)
        nn = np.einsum("a,b->ab", n, n)
        m12 = np.kron(nn, np.eye(3))
        Me += jac * rho_arr[:, None, None] * m12[None, :, :]

    K = _scatter(3 * nnode, udofs, Ke)
    M = _scatter(3 * nnode, udofs, Me)

    if has_piezo:
        # potential lives on every node of every non-void element
        eps_stack = np.array(eps_list)
        pdofs = enodes  # one phi dof per node
        Kpp = np.zeros((ne, 4, 4), dtype=complex)
        Kup = np.zeros((ne, 12, 4), dtype=complex)
        e_stack = np.array(e_list)
        et_full = np.transpose(e_stack, (0, 2, 1))  # (ne, 6, 3)
        for b, bp in zip(Bg, Bphi):
            Kpp += jac * np.einsum("ki,ekl,lj->eij", bp.conj(), eps_stack, bp, optimize=True)
            Kup += jac * np.einsum("ki,ekl,lj->eij", b.conj(), et_full, bp, optimize=True)
        Kpp_g = _scatter(nnode, pdofs, Kpp)
        rows = np.repeat(udofs, 4, axis=1).ravel()
        cols = np.tile(pdofs, (1, 12)).ravel()
        Kup_g = sp.coo_matrix(
            (Kup.reshape(ne, -1).ravel(), (rows, cols)), shape=(3 * nnode, nnode)
        ).tocsr()

        # grounded electrodes, otherwise gauge-pin the first dielectric node
        grounded = set()
        for nodes in grid.electrode_nodes.values():
            grounded.update(int(n) for n in nodes)
        pkeep = np.array([n for n in range(nnode) if n not in grounded])
        if len(grounded) == 0:
            pkeep = pkeep[1:]
        Kpp_r = Kpp_g[pkeep][:, pkeep].tocsc()
        Kup_r = Kup_g[:, pkeep].tocsc()
        lu = spla.splu(Kpp_r)
        X = lu.solve(Kup_r.conj().T.toarray())  # (nphi, 3 nnode)
        schur = Kup_r @ X
        K = (K + sp.csr_matrix(schur)).tocsr()

    # restrict to dofs carried by at least one solid element
    present = np.zeros(3 * nnode, dtype=bool)
    present[udofs.ravel()] = True

    fixed = np.zeros(nnode, dtype=bool)
    if bc.ymin == "fixed":
        fixed[np.arange(nz)] = True
    if bc.ymax == "fixed":
        fixed[(ny - 1) * nz + np.arange(nz)] = True
    if bc.zmin == "fixed":
        fixed[np.arange(ny) * nz] = True
    if bc.zmax == "fixed":
        fixed[np.arange(ny) * nz + nz - 1] = True
    present &= ~np.kron(fixed, np.ones(3, dtype=bool))

    keep = np.flatnonzero(present)
    K, M = _apply_dirichlet(K, M, keep)
    dof_node = keep // 3
    dof_comp = np.array(["ux", "uy", "uz"])[keep % 3]
    return OperatorPair(
        K=K, M=M, dof_node=dof_node, dof_comp=dof_comp, grid=grid, k=k,
        kind="elastic", meta={"pml": pml is not None, "bc": bc, "piezo": has_piezo},
    )


def assemble_optical(
    grid: Grid2D,
    materials: dict[str, MaterialRecord],
    k: float,
    pml: PMLProfile | None = None,
    bc: BCSpec | None = None,
    wavelength_check: float = 1.55e-6,
) -> OperatorPair:
    """Scalar semivectorial Helmholtz operator for the dominant in-plane
    (quasi-TE) field component.

       (-d2/dy2 - d2/dz2 + k^2) E = (omega/c)^2 eps_yy E

    PML enters as the sponge factor on the curvature + k^2 terms, i.e. an
    imaginary part added to the local refractive index.
    """
    bc = bc or BCSpec(zmin="fixed", zmax="fixed")
    ny, nz = grid.shape
    nnode = ny * nz
    elems = _element_table(grid, bc)
    Bg = _grad_B(k, grid.dy, grid.dz, bloch_row=False)
    Ng = _shape_N(grid.dy, grid.dz)
    jac = 0.25 * grid.dy * grid.dz
    sponge = _pml_factors(grid, elems, pml)

    eps_arr = np.empty(len(elems))
    enodes = np.empty((len(elems), 4), dtype=int)
    nmax = 1.0
    for i, corners in enumerate(elems):
        em = _element_material(grid, materials, corners)
        eps_arr[i] = 1.0 if em is None else em[4]
        nmax = max(nmax, math.sqrt(eps_arr[i]))
        enodes[i] = [grid.node_index(jy, jz) for jy, jz in corners]

    if max(grid.dy, grid.dz) > wavelength_check / nmax / 8.0:
        warnings.warn(
            "optical grid coarser than 8 nodes per material wavelength at "
            f"{wavelength_check * 1e9:.0f} nm",
            stacklevel=2,
        )

    ne = len(elems)
    Ke = np.zeros((ne, 4, 4), dtype=complex)
    Me = np.zeros((ne, 4, 4))
    for b, n in zip(Bg, Ng):
        lap = np.einsum("ka,kb->ab", b, b)
        nn = np.einsum("a,b->ab", n, n)
        Ke += jac * (lap + k * k * nn)[None, :, :] * sponge[:, None, None]
        Me += jac * nn[None, :, :] * eps_arr[:, None, None] / C0**2
    K = _scatter(nnode, enodes, Ke)
    M = _scatter(nnode, enodes, Me)

    fixed = np.zeros(nnode, dtype=bool)
    if bc.ymin == "fixed":
        fixed[np.arange(nz)] = True
    if bc.ymax == "fixed":
        fixed[(ny - 1) * nz + np.arange(nz)] = True
    if bc.zmin == "fixed":
        fixed[np.arange(ny) * nz] = True
    if bc.zmax == "fixed":
        fixed[np.arange(ny) * nz + nz - 1] = True
    keep = np.flatnonzero(~fixed)
    K, M = _apply_dirichlet(K, M, keep)
    return OperatorPair(
        K=K, M=M, dof_node=keep, dof_comp=np.array(["E"] * len(keep)), grid=grid,
        k=k, kind="optical",
        meta={"pml": pml is not None, "bc": bc, "eps_max": float(nmax**2)},
    )


@dataclass
class ElectrostaticSolution:
    """Solved potential plus capacitance bookkeeping (per unit length)."""

    grid: Grid2D
    phi: np.ndarray  # (ny, nz)
    energy_per_length: float  # J/m at the applied voltages
    v0: float

    @property
    def capacitance_per_length(self) -> float:
        return 2.0 * self.energy_per_length / self.v0**2

    def c_idt(self, overlap_length: float, n_periods_modeled: int = 1,
              n_periods_device: int = 1) -> float:
        """Total electrode capacitance for the device.

        ``overlap_length`` is the finger overlap (beam width); the solved
        domain covers ``n_periods_modeled`` electrode periods.
        """
        per_period = self.capacitance_per_length * overlap_length / n_periods_modeled
        return per_period * n_periods_device

    def field(self) -> tuple[np.ndarray, np.ndarray]:
        """(E_y, E_z) = -grad phi at nodes (central differences)."""
        ey = -np.gradient(self.phi, self.grid.ys, axis=0)
        ez = -np.gradient(self.phi, self.grid.zs, axis=1)
        return ey, ez


def assemble_electrostatic(
    grid: Grid2D,
    materials: dict[str, MaterialRecord],
    electrodes: dict[str, float],
    v0: float = 1.0,
) -> ElectrostaticSolution:
    """Solve the Laplace problem with fixed electrode potentials.

    ``electrodes`` maps electrode group names (keys of
    ``grid.electrode_nodes``) to potentials in volts, scaled such that
    the inter-electrode drive amplitude is ``v0``.  Capacitance follows
    from the field energy.
    """
    if len(grid.electrode_nodes) < 2:
        raise AssemblyError("need at least two electrode groups")
    missing = [g for g in grid.electrode_nodes if g not in electrodes]
    if missing:
        raise AssemblyError(f"floating electrode groups (no potential): {missing}")

    ny, nz = grid.shape
    nnode = ny * nz
    elems = _element_table(grid, BCSpec())
    Bg = _grad_B(0.0, grid.dy, grid.dz, bloch_row=False)
    jac = 0.25 * grid.dy * grid.dz

    eps_stack = np.empty((len(elems), 2, 2))
    enodes = np.empty((len(elems), 4), dtype=int)
    for i, corners in enumerate(elems):
        em = _element_material(grid, materials, corners)
        eps_stack[i] = (EPS0 * np.eye(3) if em is None else em[3])[1:, 1:]
        enodes[i] = [grid.node_index(jy, jz) for jy, jz in corners]

    Ke = np.zeros((len(elems), 4, 4))
    for b in Bg:
        Ke += jac * np.einsum("ki,ekl,lj->eij", b, eps_stack, b, optimize=True)
    K = _scatter(nnode, enodes, Ke)

    phi = np.zeros(nnode)
    is_dirichlet = np.zeros(nnode, dtype=bool)
    for group, nodes in grid.electrode_nodes.items():
        phi[nodes] = electrodes[group] * v0
        is_dirichlet[nodes] = True
    free = np.flatnonzero(~is_dirichlet)
    diri = np.flatnonzero(is_dirichlet)
    rhs = -K[free][:, diri] @ phi[diri]
    phi[free] = spla.spsolve(K[free][:, free].tocsc(), rhs)

    energy = 0.5 * float(np.real(phi @ (K @ phi)))
    return ElectrostaticSolution(
        grid=grid, phi=phi.reshape(ny, nz), energy_per_length=energy, v0=v0
    )


# ---------------------------------------------------------------------------
# grid builders

def uniform_grid(
    y_extent: tuple[float, float],
    z_extent: tuple[float, float],
    spacing: float,
    label: str = "silicon",
) -> Grid2D:
    ny = max(2, int(round((y_extent[1] - y_extent[0]) / spacing)) + 1)
    nz = max(2, int(round((z_extent[1] - z_extent[0]) / spacing)) + 1)
    ys = np.linspace(*y_extent, ny)
    zs = np.linspace(*z_extent, nz)
    labels = np.full((ny, nz), label, dtype=object)
    return Grid2D(ys=ys, zs=zs, labels=labels, fill=np.ones((ny, nz)))


def _layer_ellipse(cell: UnitCell, label: str, thickness: float) -> tuple[float, float, float]:
    """Effective mid-thickness (h_x, h_y, width) of one patterned layer."""
    hx, hy, w = cell.h_x, cell.h_y, cell.w
    if label == "silicon" and len(cell.stack) > 1:
        # silicon hole under the LN carries the misalignment buffer
        buf = 2.0 * cell.misalignment_buffer
        hx, hy, w = hx + buf, hy + buf, w + buf
    th = math.tan(math.radians(cell.hole_angle_deg))
    te = math.tan(math.radians(cell.edge_angle_deg))
    hx = max(1e-9, hx - thickness * th)
    hy = max(1e-9, hy - thickness * th)
    w = w + thickness * te
    return hx, hy, w


def _hole_fraction(y: np.ndarray, hx: float, hy: float, a: float) -> np.ndarray:
    """x-averaged hole occupancy at transverse position y (chord of the ellipse)."""
    t = 2.0 * y / hy
    chord = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    return np.clip((hx / a) * chord, 0.0, 1.0)


def cell_cross_section(
    cell: UnitCell,
    spacing: float = 25e-9,
    substrate: str = "sapphire",
    substrate_depth: float = 1.0e-6,
    side_margin: float = 0.6e-6,
    top_margin: float = 0.5e-6,
    interlayer: tuple[str, float] | None = None,
) -> Grid2D:
    """Cross-section grid of one unit cell.

    The substrate occupies z < 0 at full width; patterned device layers
    stack upward from z = 0 over the beam width with the x-averaged hole
    dilution.  ``interlayer`` optionally inserts an unpatterned film
    (e.g. a thin oxide) between substrate and first device layer.
    """
    layers: list[tuple[str, float, str]] = []  # (label, thickness, kind)
    if interlayer is not None and interlayer[1] > 0:
        layers.append((interlayer[0], interlayer[1], "film"))
    for label, t in cell.stack:
        layers.append((label, t, "patterned"))
    if cell.electrodes is not None:
        count, width, thickness, mat = cell.electrodes
        layers.append((mat, thickness, "electrode"))

    stack_top = sum(t for _, t, _ in layers)
    half_w = 0.5 * max(cell.w, cell.h_y) + side_margin
    ys = np.arange(-half_w, half_w + 0.5 * spacing, spacing)
    zs = np.arange(-substrate_depth, stack_top + top_margin + 0.5 * spacing, spacing)
    ny, nz = len(ys), len(zs)
    labels = np.full((ny, nz), AIR, dtype=object)
    fill = np.ones((ny, nz))

    labels[:, zs <= 0] = substrate
    # first Fourier harmonic (along x) of the material indicator; drives
    # the zone-edge two-wave splitting
    fill1 = np.zeros((ny, nz))

    z0 = 0.0
    for label, t, kind in layers:
        z1 = z0 + t
        in_layer = (zs > z0) & (zs <= z1 + 1e-15)
        if kind == "patterned":
            hx, hy, w = _layer_ellipse(cell, label, t)
            in_beam = np.abs(ys) <= 0.5 * w
            hole = _hole_fraction(ys, hx, hy, cell.a)
            hole[np.abs(ys) > 0.5 * hy] = 0.0
            harm = -(2.0 / math.pi) * np.sin(math.pi * hole)
            for iz in np.flatnonzero(in_layer):
                labels[in_beam, iz] = label
                fill[in_beam, iz] = 1.0 - hole[in_beam]
                fill1[in_beam, iz] = harm[in_beam]
        elif kind == "electrode":
            # electrode film: diluted by the finger duty cycle along x
            duty = min(1.0, cell.electrodes[1] / cell.a)
            in_beam = np.abs(ys) <= 0.5 * cell.w
            for iz in np.flatnonzero(in_layer):
                labels[in_beam, iz] = label
                fill[in_beam, iz] = duty
        else:  # unpatterned film
            in_beam = np.abs(ys) <= 0.5 * cell.w + cell.misalignment_buffer
            for iz in np.flatnonzero(in_layer):
                labels[in_beam, iz] = label
        z0 = z1

    core_z = 0.5 * stack_top
    return Grid2D(
        ys=ys, zs=zs, labels=labels, fill=fill, core=(0.0, core_z),
        meta={"cell": cell, "substrate": substrate, "stack_top": stack_top,
              "fill1": fill1},
    )


def saw_strip(
    material_label: str,
    wavelength: float,
    depth_wavelengths: float = 3.0,
    nodes_per_wavelength: int = 60,
    strip_width: float = 10e-9,
) -> Grid2D:
    """Thin, deep substrate strip for surface-wave dispersion runs.

    Periodic in y (2 nodes across the 10 nm strip), fixed bottom, free
    top surface at z = 0.
    """
    depth = depth_wavelengths * wavelength
    dz = wavelength / nodes_per_wavelength
    nz = int(round(depth / dz)) + 1
    zs = np.linspace(-depth, 0.0, nz)
    ys = np.array([0.0, strip_width])
    labels = np.full((2, nz), material_label, dtype=object)
    return Grid2D(ys=ys, zs=zs, labels=labels, fill=np.ones((2, nz)))


def idt_plane(
    cell: UnitCell,
    spacing: float = 10e-9,
    substrate: str = "sapphire",
    substrate_depth: float = 0.6e-6,
    top_margin: float = 0.4e-6,
    n_periods: int = 1,
) -> Grid2D:
    """Longitudinal (x, z) plane through the beam for IDT electrostatics.

    The grid's first axis is the beam axis x (stored in ``ys``).  One
    electrode period spans two cells (alternating polarity, one finger
    per cell period).  Electrode node groups 'pos'/'neg' get Dirichlet
    values.  Layers are unpatterned (potential plane through the solid
    between holes).
    """
    if cell.electrodes is None:
        raise AssemblyError("cell has no electrode specification")
    count, width, thickness, mat = cell.electrodes
    period = 2.0 * cell.a
    length = n_periods * period
    stack_top = sum(t for _, t in cell.stack)
    xs = np.arange(0.0, length + 0.5 * spacing, spacing)
    zs = np.arange(-substrate_depth, stack_top + top_margin + 0.5 * spacing, spacing)
    nx, nz = len(xs), len(zs)
    labels = np.full((nx, nz), AIR, dtype=object)
    labels[:, zs <= 0] = substrate
    z0 = 0.0
    for label, t in cell.stack:
        in_layer = (zs > z0) & (zs <= z0 + t + 1e-15)
        labels[:, in_layer] = label
        z0 += t

    iz_top = int(np.argmin(np.abs(zs - stack_top)))
    pos_nodes, neg_nodes = [], []
    for f in range(2 * n_periods):
        xc = (f + 0.5) * cell.a
        sel = np.flatnonzero(np.abs(xs - xc) <= 0.5 * width)
        group = pos_nodes if f % 2 == 0 else neg_nodes
        group.extend(int(ix * nz + iz_top) for ix in sel)
    grid = Grid2D(
        ys=xs, zs=zs, labels=labels, fill=np.ones((nx, nz)),
        electrode_nodes={"pos": np.array(pos_nodes), "neg": np.array(neg_nodes)},
        meta={"cell": cell, "n_periods": n_periods, "plane": "xz"},
    )
    return grid
