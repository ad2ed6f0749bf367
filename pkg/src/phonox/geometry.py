"""Parametric unit cells, region chaining, the LN taper law, device presets,
and disorder injection.

Lengths are meters throughout.  Device presets mirror the tabulated cell
parameters of the short/long transducer variants; preset JSON files use
the same field names as :class:`UnitCell`.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

NM = 1e-9

# Cubic law h_x(h_y) for the LN taper, coefficients in rising polynomial
# order and nanometer units.
TAPER_COEFFS_NM = (-1271.0, 9.365, -0.01875, 1.238e-5)

# Lower clamp applied to perturbed ellipse axes (prevents non-physical
# holes in the far tails of strong disorder draws).
DISORDER_FLOOR = 10 * NM


class GeometryError(ValueError):
    """Raised for invalid cells, layouts or presets."""


@dataclass(frozen=True)
class UnitCell:
    """One period of the patterned beam.

    ``h_x``/``h_y`` are the full ellipse axes along/across the beam; the
    overlapping regime ``h_x > a`` or ``h_y > w`` is allowed (taper
    cells).  ``stack`` lists patterned device layers bottom-up as
    (material label, thickness).  Sidewall angles are carried as metadata
    and projected to effective mid-thickness widths by the cross-section
    builder.
    """

    a: float
    h_x: float
    h_y: float
    w: float
    stack: tuple[tuple[str, float], ...] = (("silicon", 220 * NM),)
    hole_angle_deg: float = 0.0
    edge_angle_deg: float = 0.0
    electrodes: tuple[int, float, float, str] | None = None  # (count, width, thickness, material)
    misalignment_buffer: float = 0.0
    region: str = ""

    def __post_init__(self):
        if self.a <= 0:
            raise GeometryError("period a must be positive")
        if self.h_x <= 0 or self.h_y <= 0:
            raise GeometryError("ellipse axes must be positive")
        if self.w <= 0:
            raise GeometryError("beam width must be positive")
        for label, t in self.stack:
            if t <= 0:
                raise GeometryError(f"layer {label!r} thickness must be positive")

    def scalars(self) -> dict[str, float]:
        d = {"a": self.a, "h_x": self.h_x, "h_y": self.h_y, "w": self.w}
        for label, t in self.stack:
            d[f"t_{label}"] = t
        return d

    def with_scalars(self, **kw) -> "UnitCell":
        layers = list(self.stack)
        updates = {}
        for k, v in kw.items():
            if k.startswith("t_"):
                label = k[2:]
                layers = [(l, v if l == label else t) for l, t in layers]
            else:
                updates[k] = v
        return replace(self, stack=tuple(layers), **updates)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "h_x": self.h_x,
            "h_y": self.h_y,
            "w": self.w,
            "stack": [[l, t] for l, t in self.stack],
            "hole_angle_deg": self.hole_angle_deg,
            "edge_angle_deg": self.edge_angle_deg,
            "electrodes": list(self.electrodes) if self.electrodes else None,
            "misalignment_buffer": self.misalignment_buffer,
            "region": self.region,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UnitCell":
        el = d.get("electrodes")
        return cls(
            a=d["a"],
            h_x=d["h_x"],
            h_y=d["h_y"],
            w=d["w"],
            stack=tuple((l, t) for l, t in d.get("stack", [["silicon", 220 * NM]])),
            hole_angle_deg=d.get("hole_angle_deg", 0.0),
            edge_angle_deg=d.get("edge_angle_deg", 0.0),
            electrodes=tuple(el) if el else None,
            misalignment_buffer=d.get("misalignment_buffer", 0.0),
            region=d.get("region", ""),
        )


def smooth_step(t: float) -> float:
    """Cubic transition profile s(t) = 3t^2 - 2t^3 with zero end slopes."""
    return t * t * (3.0 - 2.0 * t)


def taper_hx(h_y: float, coeffs_nm: tuple[float, float, float, float] = TAPER_COEFFS_NM) -> float:
    """Ellipse axis h_x along the LN removal taper as a cubic in h_y.

    Evaluated in nanometer units and returned in meters.  Inputs outside
    the taper span (roughly 320-680 nm) are flagged with a warning but
    still evaluated; the polynomial itself is total.
    """
    hy_nm = h_y / NM
    if not (300.0 <= hy_nm <= 700.0):
        warnings.warn(
            f"taper_hx evaluated outside the fitted span: h_y = {hy_nm:.1f} nm",
            stacklevel=2,
        )
    a0, b1, c2, d3 = coeffs_nm
    hx_nm = a0 + b1 * hy_nm + c2 * hy_nm**2 + d3 * hy_nm**3
    return hx_nm * NM


def interpolate_cells(c0: UnitCell, c1: UnitCell, n: int, profile: str = "smoothstep") -> list[UnitCell]:
    """``n`` cells (endpoints included) morphing ``c0`` into ``c1``.

    Every scalar parameter follows the cubic smooth-step; with
    ``profile="ln_taper"`` the ellipse axis h_x instead tracks the taper
    polynomial of the interpolated h_y.
    """
    if n < 2:
        raise GeometryError("need n >= 2 cells to interpolate")
    labels0 = [l for l, _ in c0.stack]
    labels1 = [l for l, _ in c1.stack]
    if labels0 != labels1:
        raise GeometryError(f"incompatible layer stacks: {labels0} vs {labels1}")
    s0, s1 = c0.scalars(), c1.scalars()
    trans_tag = f"{c0.region}:{c1.region}" if c0.region or c1.region else ""
    cells = []
    for i in range(n):
        t = i / (n - 1)
        s = smooth_step(t)
        vals = {k: s0[k] + (s1[k] - s0[k]) * s for k in s0}
        if profile == "ln_taper":
            vals["h_x"] = taper_hx(vals["h_y"])
        elif profile != "smoothstep":
            raise GeometryError(f"unknown transition profile {profile!r}")
        if i == 0:
            cell = c0
        elif i == n - 1:
            cell = c1
        else:
            cell = replace(c0.with_scalars(**vals), region=trans_tag)
        cells.append(cell)
    return cells


@dataclass(frozen=True)
class Region:
    """A block of identical cells (start == end) or a transition.

    ``count`` is the number of cells generated by this region.  For a
    transition the generated cells lie strictly between the neighboring
    block cells, matching the tabulated "transition cells between
    adjacent regions" convention.
    """

    start: UnitCell
    end: UnitCell
    count: int
    profile: str = "smoothstep"

    def __post_init__(self):
        if self.count < 1:
            raise GeometryError("region count must be >= 1")

    @property
    def is_block(self) -> bool:
        return self.start == self.end

    def cells(self) -> list[UnitCell]:
        if self.is_block:
            return [self.start] * self.count
        inner = interpolate_cells(self.start, self.end, self.count + 2, self.profile)
        return inner[1:-1]


@dataclass(frozen=True)
class DeviceLayout:
    """Ordered chain of regions forming one device."""

    regions: tuple[Region, ...]
    name: str = ""

    def __post_init__(self):
        regs = tuple(self.regions)
        for r0, r1 in zip(regs, regs[1:]):
            if r0.is_block and r1.is_block:
                continue  # explicit cell lists: no sharing requirement
            c0, c1 = r0.end, r1.start
            if [l for l, _ in c0.stack] != [l for l, _ in c1.stack]:
                # Layer-stack seam (LN termination at the taper end): the two
                # sides describe the same physical cell in different frames;
                # require only the shared period.
                if not math.isclose(c0.a, c1.a, rel_tol=1e-12):
                    raise GeometryError("stack seam cells must share the period a")
                continue
            if c0 != c1:
                raise GeometryError("adjacent regions must share their boundary cell exactly")
        object.__setattr__(self, "regions", regs)

    def cells(self) -> list[UnitCell]:
        out: list[UnitCell] = []
        for r in self.regions:
            out.extend(r.cells())
        return out

    def cell_count(self) -> int:
        return sum(r.count for r in self.regions)

    def map_cells(self, fn) -> "DeviceLayout":
        """Apply ``fn`` to every region-defining cell (blocks and transition ends)."""
        new_regions = []
        cache: dict[int, UnitCell] = {}

        def conv(c: UnitCell) -> UnitCell:
            key = id(c)
            if key not in cache:
                cache[key] = fn(c)
            return cache[key]

        for r in self.regions:
            new_regions.append(Region(conv(r.start), conv(r.end), r.count, r.profile))
        return DeviceLayout(tuple(new_regions), self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "regions": [
                {
                    "start": r.start.to_dict(),
                    "end": r.end.to_dict(),
                    "count": r.count,
                    "profile": r.profile,
                }
                for r in self.regions
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceLayout":
        regions = tuple(
            Region(
                UnitCell.from_dict(r["start"]),
                UnitCell.from_dict(r["end"]),
                int(r["count"]),
                r.get("profile", "smoothstep"),
            )
            for r in d["regions"]
        )
        return cls(regions, d.get("name", ""))


@dataclass(frozen=True)
class DisorderSpec:
    """Normal perturbation of every ellipse's axes.

    ``sigma`` is the standard deviation applied independently to h_x and
    h_y of each cell; draws are reproducible from ``seed``.  Axes are
    clamped at ``floor`` (a modeling choice, surfaced in study metadata).
    """

    sigma: float
    seed: int = 0
    floor: float = DISORDER_FLOOR

    def __post_init__(self):
        if self.sigma < 0:
            raise GeometryError("disorder sigma must be >= 0")


def apply_disorder(layout: DeviceLayout, spec: DisorderSpec) -> DeviceLayout:
    """Perturb h_x and h_y of every cell by independent N(0, sigma^2) draws.

    The layout is first expanded to its explicit cell list so each cell
    receives its own draw; the result is a layout of single-cell blocks.
    Non-ellipse parameters are preserved exactly.
    """
    cells = layout.cells()
    if spec.sigma == 0.0:
        return DeviceLayout(
            tuple(Region(c, c, 1) for c in cells), name=layout.name
        )
    rng = np.random.default_rng(spec.seed)
    draws = rng.normal(0.0, spec.sigma, size=(len(cells), 2))
    out = []
    for c, (dx, dy) in zip(cells, draws):
        hx = max(spec.floor, c.h_x + dx)
        hy = max(spec.floor, c.h_y + dy)
        out.append(replace(c, h_x=hx, h_y=hy))
    return DeviceLayout(tuple(Region(c, c, 1) for c in out), name=layout.name)


# ---------------------------------------------------------------------------
# device presets

SI_STACK = (("silicon", 220 * NM),)
EMC_STACK = (("silicon", 220 * NM), ("lithium_niobate", 100 * NM))

OMC_MIRROR = UnitCell(a=398 * NM, h_x=197 * NM, h_y=530 * NM, w=700 * NM, stack=SI_STACK, region="OMC-mirror")
OMC_DEFECT = UnitCell(a=193 * NM, h_x=98 * NM, h_y=429 * NM, w=700 * NM, stack=SI_STACK, region="OMC-defect")
PARTIAL_MIRROR = UnitCell(a=363 * NM, h_x=163 * NM, h_y=464 * NM, w=700 * NM, stack=SI_STACK, region="partial-mirror")

_EMC_KW = dict(
    stack=EMC_STACK,
    hole_angle_deg=18.0,
    edge_angle_deg=8.0,
    misalignment_buffer=50 * NM,
)
TAPER_END = UnitCell(
    a=200 * NM, h_x=taper_hx(675 * NM), h_y=675 * NM, w=770 * NM, region="taper", **_EMC_KW
)
EMC_DEFECT = UnitCell(
    a=308 * NM, h_x=208 * NM, h_y=321 * NM, w=570 * NM, region="EMC-defect",
    electrodes=(4, 80 * NM, 30 * NM, "aluminum"), **_EMC_KW
)
EMC_MIRROR = UnitCell(
    a=450 * NM, h_x=245 * NM, h_y=349 * NM, w=570 * NM, region="EMC-mirror", **_EMC_KW
)

# Transition cell counts between adjacent regions.
N_MIRROR_TO_DEFECT = 10
N_DEFECT_TO_PARTIAL = 10
N_PARTIAL_BLOCK = 8
N_PARTIAL_TO_TAPER = 4
N_TAPER_TO_EMC = 4
N_EMC_DEFECT_TO_MIRROR = 5

# Terminating block sizes (not tabulated; toolkit defaults).
N_OMC_MIRROR_CELLS = 6
N_EMC_MIRROR_CELLS = 1
N_EMC_ONLY_TRANSITION = 9


def _tag(cell: UnitCell, region: str) -> UnitCell:
    return replace(cell, region=region)


def _strip_ln(cell: UnitCell) -> UnitCell:
    """Silicon-frame twin of an EMC-stack cell (for chaining into OMC cells)."""
    return replace(cell, stack=SI_STACK, electrodes=None)


def _transducer(name: str, n_defect: int) -> DeviceLayout:
    # The LN taper runs between taper-end and EMC defect; upstream of the
    # taper end the LN has fully receded, so partial-mirror chaining uses
    # the silicon-frame twin of the taper-end cell.
    taper_end_si = _tag(
        UnitCell(a=200 * NM, h_x=100 * NM, h_y=459 * NM, w=900 * NM, stack=SI_STACK),
        "taper",
    )
    regions = (
        Region(OMC_MIRROR, OMC_MIRROR, N_OMC_MIRROR_CELLS),
        Region(OMC_MIRROR, OMC_DEFECT, N_MIRROR_TO_DEFECT),
        Region(OMC_DEFECT, OMC_DEFECT, n_defect),
        Region(OMC_DEFECT, PARTIAL_MIRROR, N_DEFECT_TO_PARTIAL),
        Region(PARTIAL_MIRROR, PARTIAL_MIRROR, N_PARTIAL_BLOCK),
        Region(PARTIAL_MIRROR, taper_end_si, N_PARTIAL_TO_TAPER),
        Region(taper_end_si, taper_end_si, 1),
        Region(TAPER_END, EMC_DEFECT, N_TAPER_TO_EMC, profile="ln_taper"),
        Region(EMC_DEFECT, EMC_DEFECT, 1),
        Region(EMC_DEFECT, EMC_MIRROR, N_EMC_DEFECT_TO_MIRROR),
        Region(EMC_MIRROR, EMC_MIRROR, N_EMC_MIRROR_CELLS),
    )
    return DeviceLayout(regions, name=name)


def _omc_only(name: str, n_defect: int) -> DeviceLayout:
    regions = (
        Region(OMC_MIRROR, OMC_MIRROR, N_OMC_MIRROR_CELLS),
        Region(OMC_MIRROR, OMC_DEFECT, N_MIRROR_TO_DEFECT),
        Region(OMC_DEFECT, OMC_DEFECT, n_defect),
        Region(OMC_DEFECT, OMC_MIRROR, N_MIRROR_TO_DEFECT),
        Region(OMC_MIRROR, OMC_MIRROR, N_OMC_MIRROR_CELLS),
    )
    return DeviceLayout(regions, name=name)


def _emc_only(name: str) -> DeviceLayout:
    regions = (
        Region(EMC_MIRROR, EMC_MIRROR, N_EMC_MIRROR_CELLS),
        Region(EMC_MIRROR, EMC_DEFECT, N_EMC_ONLY_TRANSITION),
        Region(EMC_DEFECT, EMC_DEFECT, 1),
        Region(EMC_DEFECT, EMC_MIRROR, N_EMC_ONLY_TRANSITION),
        Region(EMC_MIRROR, EMC_MIRROR, N_EMC_MIRROR_CELLS),
    )
    return DeviceLayout(regions, name=name)


_PRESET_BUILDERS = {
    "sOMC-transducer": lambda: _transducer("sOMC-transducer", 1),
    "lOMC-transducer": lambda: _transducer("lOMC-transducer", 9),
    "sOMC-only": lambda: _omc_only("sOMC-only", 1),
    "EMC-only": lambda: _emc_only("EMC-only"),
}


def preset_names() -> list[str]:
    return sorted(_PRESET_BUILDERS)


def device_preset(name: str) -> DeviceLayout:
    """Build a named device layout.

    Presets: ``sOMC-transducer``, ``lOMC-transducer``, ``sOMC-only``,
    ``EMC-only``.  A JSON file of the same schema placed in the preset
    data directory (or ``PHONOX_DATA_DIR``) overrides the built-in.
    """
    path = _preset_dir() / f"{name}.json"
    if path.exists():
        return load_layout(path)
    try:
        return _PRESET_BUILDERS[name]()
    except KeyError:
        raise GeometryError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None


def _preset_dir() -> Path:
    env = os.environ.get("PHONOX_DATA_DIR")
    if env:
        return Path(env) / "presets"
    return Path(resources.files("phonox").joinpath("data/presets"))  # type: ignore[arg-type]


def load_layout(path: str | Path) -> DeviceLayout:
    with open(path) as fh:
        return DeviceLayout.from_dict(json.load(fh))


def save_layout(layout: DeviceLayout, path: str | Path):
    with open(path, "w") as fh:
        json.dump(layout.to_dict(), fh, indent=1)
