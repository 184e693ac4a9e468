"""Level sets, dyadic cube selection, Whitney cubes, H^1 atoms and stopping times.

Dyadic cubes are anchored to the grid: a cube of level ``l`` has physical
side ``2^l`` and its lower corner at ``coords * 2^l``.  The grid spacing must
be a power of two so the finest cube is one cell.  Band scale ``j`` of the
bump family and cube level coincide: pieces ``f_j`` are restricted to cubes of
level ``j``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .grid import Field, GridSpec
from .littlewood_paley import BumpFamily, band_pieces, h1_norm, peetre_square_function, reconstruct
from .maximal import hl_max

WHITNEY_THRESHOLD = 100.0**-6
ENLARGEMENT = 20.0
NEG_INF = -math.inf

Regime = Literal["annulus-thick", "annulus-thin"]
REGIMES: tuple[str, ...] = ("annulus-thick", "annulus-thin")


def _log2_exact(x: float, what: str) -> int:
    e = math.log2(x)
    if not float(e).is_integer():
        raise ValueError(f"{what}={x} is not a power of two")
    return int(e)


@dataclass(frozen=True, order=True)
class DyadicCube:
    level: int
    coords: tuple[int, ...]

    @property
    def side(self) -> float:
        return 2.0**self.level

    def volume(self, d: int | None = None) -> float:
        d = len(self.coords) if d is None else d
        return self.side**d

    def parent(self) -> DyadicCube:
        return DyadicCube(self.level + 1, tuple(c >> 1 for c in self.coords))

    def contains(self, other: DyadicCube) -> bool:
        if other.level > self.level:
            return False
        shift = self.level - other.level
        return all((c >> shift) == s for c, s in zip(other.coords, self.coords))

    def side_cells(self, g: GridSpec) -> int:
        return int(round(self.side / g.spacing))

    def cell_slices(self, g: GridSpec) -> tuple[slice, ...]:
        s = self.side_cells(g)
        return tuple(slice(c * s, (c + 1) * s) for c in self.coords)

    def mask(self, g: GridSpec) -> np.ndarray:
        m = np.zeros(g.shape, dtype=bool)
        m[self.cell_slices(g)] = True
        return m

    def enlarged_mask(self, g: GridSpec, factor: float = ENLARGEMENT) -> np.ndarray:
        """Cells meeting the concentric ``factor``-times enlargement (periodic)."""
        s = self.side_cells(g)
        pad = _enlarge_pad(s, factor)
        m = np.ones(g.shape, dtype=bool)
        for axis, c in enumerate(self.coords):
            width = s + 2 * pad
            line = np.zeros(g.n, dtype=bool)
            if width >= g.n:
                line[:] = True
            else:
                line[(np.arange(width) + c * s - pad) % g.n] = True
            shape = [1] * g.d
            shape[axis] = g.n
            m &= line.reshape(shape)
        return m


def _enlarge_pad(side_cells: int, factor: float) -> int:
    return int(math.ceil((factor - 1.0) * side_cells / 2.0 - 1e-12))


def _block_counts(mask: np.ndarray, s: int) -> np.ndarray:
    """Number of true cells in each aligned block of side ``s``."""
    n = mask.shape[0]
    d = mask.ndim
    shape = []
    for _ in range(d):
        shape += [n // s, s]
    return mask.reshape(shape).sum(axis=tuple(range(1, 2 * d, 2)))


def _window_count(mask: np.ndarray, start: int, width: int) -> np.ndarray:
    """``out[p] = #true cells in the periodic box [p + start, p + start + width)^d``."""
    a = mask.astype(np.int64)
    n = a.shape[0]
    for axis in range(a.ndim):
        if width >= n:
            tot = a.sum(axis=axis, keepdims=True)
            a = np.repeat(tot, n, axis=axis)
            continue
        c = np.cumsum(np.concatenate([a, a], axis=axis), axis=axis)
        zero = np.zeros_like(np.take(c, [0], axis=axis))
        c = np.concatenate([zero, c], axis=axis)
        idx = (np.arange(n) + start) % n
        a = np.take(c, idx + width, axis=axis) - np.take(c, idx, axis=axis)
    return a


@dataclass
class LevelSetSystem:
    """Level sets of ``S_max f`` and the cube families derived from them."""

    grid: GridSpec
    kappas: list[int]
    s_max: Field | None
    omega: dict[int, np.ndarray] = field(default_factory=dict)
    omega_tilde: dict[int, np.ndarray] = field(default_factory=dict)
    selected: dict[int, dict[int, list[DyadicCube]]] = field(default_factory=dict)
    whitney: dict[int, list[DyadicCube]] = field(default_factory=dict)
    owner: dict[tuple[int, DyadicCube], DyadicCube] = field(default_factory=dict)
    orphans: int = 0
    uncovered_cells: dict[int, int] = field(default_factory=dict)
    threshold: float = WHITNEY_THRESHOLD
    enlargement: float = ENLARGEMENT
    levels: tuple[int, int] = (0, 0)

    @property
    def empty(self) -> bool:
        return not self.kappas

    def omega_ratio(self) -> float:
        """``max_kappa |Omega~_kappa| / |Omega_kappa|``."""
        vals = [
            np.count_nonzero(self.omega_tilde[k]) / np.count_nonzero(self.omega[k])
            for k in self.kappas
            if np.count_nonzero(self.omega[k])
        ]
        return float(max(vals)) if vals else 0.0


def _cube_levels(g: GridSpec, fam: BumpFamily) -> tuple[int, int]:
    lh = _log2_exact(g.spacing, "grid spacing")
    lL = _log2_exact(g.box_length, "box length")
    if fam.j_min < lh:
        raise ValueError(f"family scale {fam.j_min} is finer than one cell (2^{lh})")
    return fam.j_min, min(fam.j_max, lL)


def kappa_range(s_max: np.ndarray) -> list[int]:
    """Levels from the largest full-box level to the last nonempty one."""
    top = float(s_max.max())
    if top <= 0.0:
        return []
    hi = math.ceil(math.log2(top)) - 1
    bottom = float(s_max.min())
    lo = math.ceil(math.log2(bottom)) - 1 if bottom > 0 else hi - 64
    return list(range(lo, hi + 1))


def build_level_system(
    f: Field,
    fam: BumpFamily,
    threshold: float = WHITNEY_THRESHOLD,
    enlargement: float = ENLARGEMENT,
) -> LevelSetSystem:
    """Level sets ``Omega_kappa``, their enlargements, selected cubes and Whitney cubes."""
    g = f.grid
    if fam.grid != g:
        raise ValueError("bump family was built for a different grid")
    lmin, lmax = _cube_levels(g, fam)
    if not np.any(f.values):
        return LevelSetSystem(g, [], None, threshold=threshold, enlargement=enlargement, levels=(lmin, lmax))
    s_max = peetre_square_function(f, fam)
    kappas = kappa_range(s_max.values)
    sysm = LevelSetSystem(g, kappas, s_max, threshold=threshold, enlargement=enlargement, levels=(lmin, lmax))
    for k in kappas + [kappas[-1] + 1]:
        sysm.omega[k] = s_max.values > 2.0**k
    for k in kappas:
        chi = Field(g, sysm.omega[k].astype(np.float64))
        sysm.omega_tilde[k] = hl_max(chi).values > threshold
        sysm.selected[k] = {}

    # Each aligned cube R picks the unique kappa with |R ∩ Omega_kappa| >= |R|/2 > |R ∩ Omega_{kappa+1}|.
    for level in range(lmin, lmax + 1):
        s = int(round(2.0**level / g.spacing))
        half = 0.5 * s**g.d
        choice = np.full((g.n // s,) * g.d, np.iinfo(np.int64).min, dtype=np.int64)
        for k in kappas:
            big = _block_counts(sysm.omega[k], s) >= half
            choice[big] = k
        for k in kappas:
            idx = np.argwhere(choice == k)
            sysm.selected[k][level] = [DyadicCube(level, tuple(int(c) for c in row)) for row in idx]

    for k in kappas:
        sysm.whitney[k], sysm.uncovered_cells[k] = _whitney(sysm.omega_tilde[k], g, lmin, lmax, enlargement)
        _assign(sysm, k)
    return sysm


def _whitney(tilde: np.ndarray, g: GridSpec, lmin: int, lmax: int, factor: float):
    """Maximal aligned cubes whose enlargement lies in ``tilde``; returns cubes and uncovered cell count."""
    cubes: list[DyadicCube] = []
    covered = np.zeros(g.shape, dtype=bool)
    for level in range(lmax, lmin - 1, -1):
        s = int(round(2.0**level / g.spacing))
        pad = _enlarge_pad(s, factor)
        width = s + 2 * pad
        full = min(width, g.n) ** g.d
        counts = _window_count(tilde, -pad, width)
        corners = counts[(slice(None, None, s),) * g.d]
        ok = corners == full
        taken = _block_counts(covered, s) > 0
        for row in np.argwhere(ok & ~taken):
            cube = DyadicCube(level, tuple(int(c) for c in row))
            cubes.append(cube)
            covered[cube.cell_slices(g)] = True
    uncovered = int(np.count_nonzero(tilde & ~covered))
    return cubes, uncovered


def _assign(sysm: LevelSetSystem, k: int) -> None:
    g = sysm.grid
    owner_idx = np.full(g.shape, -1, dtype=np.int64)
    ws = sysm.whitney[k]
    for i, w in enumerate(ws):
        owner_idx[w.cell_slices(g)] = i
    for level, cubes in sysm.selected[k].items():
        for r in cubes:
            corner = tuple(sl.start for sl in r.cell_slices(g))
            i = owner_idx[corner]
            if i >= 0 and ws[i].contains(r):
                sysm.owner[(k, r)] = ws[i]
            else:
                sysm.orphans += 1


@dataclass
class Atom:
    """One atom ``b_W`` with its per-scale pieces and weight."""

    W: DyadicCube
    kappa: int
    pieces: dict[int, Field]
    cubes: dict[int, list[DyadicCube]]
    assembled: Field
    gamma: float

    @property
    def level(self) -> int:
        return self.W.level


@dataclass
class AtomSet:
    grid: GridSpec
    atoms: list[Atom]
    kappas: list[int]
    system: LevelSetSystem

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)


def build_atoms(sysm: LevelSetSystem, f: Field, fam: BumpFamily) -> AtomSet:
    """Split ``f_j = phi_j * f`` over the selected cubes of each Whitney cube and assemble ``b_W``."""
    g = f.grid
    if sysm.grid != g or fam.grid != g:
        raise ValueError("level system, field and family must share one grid")
    if sysm.empty:
        return AtomSet(g, [], [], sysm)
    if not np.allclose(sysm.s_max.values, peetre_square_function(f, fam).values, rtol=1e-12, atol=0):
        raise ValueError("level system was not built from this field")
    lmin, lmax = sysm.levels
    fj = band_pieces(f, fam)
    atoms = []
    for k in sysm.kappas:
        grouped: dict[DyadicCube, dict[int, list[DyadicCube]]] = {w: {} for w in sysm.whitney[k]}
        for level, cubes in sysm.selected[k].items():
            for r in cubes:
                w = sysm.owner.get((k, r))
                if w is not None and level <= w.level:
                    grouped[w].setdefault(level, []).append(r)
        for w, by_level in grouped.items():
            if not by_level:
                continue
            pieces: dict[int, Field] = {}
            sq = 0.0
            for level, cubes in sorted(by_level.items()):
                m = np.zeros(g.shape, dtype=bool)
                for r in cubes:
                    m[r.cell_slices(g)] = True
                piece = np.where(m, fj[level], 0.0)
                pieces[level] = Field(g, piece)
                sq += float(np.sum(piece * piece)) * g.cell_volume
            assembled = Field(g, reconstruct({j: p.values for j, p in pieces.items()}, g, fam))
            atoms.append(Atom(w, k, pieces, by_level, assembled, math.sqrt(sq)))
    return AtomSet(g, atoms, list(sysm.kappas), sysm)


def stopping_predicate(t: int, level: int, q: float, delta: float, d: int, regime: Regime) -> bool:
    if regime == "annulus-thick":
        return math.ldexp(1.0, t * (d - 1) + level) >= q
    if regime == "annulus-thin":
        return math.ldexp(delta, t * d) >= q
    raise ValueError(f"unknown regime {regime!r}")


def thin_offset(delta: float) -> int:
    """``ceil(log2(1/delta))``."""
    return math.ceil(math.log2(1.0 / delta) - 1e-12)


def stopping_time(atom: Atom, lam: float, delta: float, regime: Regime) -> tuple[float, int]:
    """Smallest ``tau~`` satisfying the regime predicate, and the resulting ``tau``.

    annulus-thick  2^{tau~ (d-1)} 2^{l(W)} >= |W|^{1/2} gamma / lam,  tau = max(tau~, l(W))
    annulus-thin   2^{tau~ d} delta >= |W|^{1/2} gamma / lam,          tau = max(tau~, l(W) + ceil(log2 1/delta))

    A zero weight satisfies the predicate for every integer, so ``tau~`` is ``-inf``.
    """
    if not lam > 0:
        raise ValueError(f"lambda={lam} must be positive")
    if atom.gamma < 0:
        raise ValueError("negative atom weight")
    d = atom.assembled.grid.d
    return stopping_time_raw(atom.level, atom.gamma, lam, delta, d, regime)


def stopping_time_raw(level: int, gamma: float, lam: float, delta: float, d: int, regime: Regime) -> tuple[float, int]:
    if regime == "annulus-thin" and not 0.0 < delta < 0.5:
        raise ValueError(f"delta={delta} must lie in (0, 1/2)")
    if regime == "annulus-thick" and d < 2:
        raise ValueError("thick regime needs d >= 2")
    floor_tau = level if regime == "annulus-thick" else level + thin_offset(delta)
    q = math.sqrt(2.0 ** (level * d)) * gamma / lam
    if q == 0.0:
        return NEG_INF, floor_tau
    if regime == "annulus-thick":
        t = math.ceil((math.log2(q) - level) / (d - 1))
    elif regime == "annulus-thin":
        t = math.ceil(math.log2(q / delta) / d)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    # Guard the closed form against rounding in log2.
    while not stopping_predicate(t, level, q, delta, d, regime):
        t += 1
    while stopping_predicate(t - 1, level, q, delta, d, regime):
        t -= 1
    return t, max(t, floor_tau)


@dataclass
class DecompositionReport:
    residual: float
    piece_violations: int
    atom_violations: int
    gamma_mismatches: int
    orphans: int
    const_33: float
    const_36: float
    omega_ratio: float
    h1: float
    n_atoms: int
    kappa_range: tuple[int, int] | None

    @property
    def support_violations(self) -> int:
        return self.piece_violations + self.atom_violations

    @property
    def passed(self) -> bool:
        return self.residual <= 1e-6 and self.support_violations == 0


def recompute_gamma(atom: Atom, fj: dict[int, np.ndarray], g: GridSpec) -> float:
    """Weight re-accumulated cube by cube from the band pieces."""
    total = 0.0
    for level, cubes in atom.cubes.items():
        for r in cubes:
            block = fj[level][r.cell_slices(g)]
            total += float(np.sum(block * block)) * g.cell_volume
    return math.sqrt(total)


def verify_decomposition(
    atoms: AtomSet, f: Field, fam: BumpFamily, support_rtol: float = 1e-9
) -> DecompositionReport:
    """Check reconstruction, supports and weights, and measure the decomposition constants.

    ``b_W`` is a sum of frequency-compact filters applied to pieces supported in
    ``W``, so outside ``W*`` it is small rather than exactly zero; values above
    ``support_rtol * max|b_W|`` there count as violations.
    """
    g = f.grid
    fnorm = math.sqrt(float(np.sum(f.values**2)))
    if not atoms.atoms:
        res = 0.0 if fnorm == 0 else 1.0
        return DecompositionReport(res, 0, 0, 0, atoms.system.orphans, 0.0, 0.0, 0.0, 0.0, 0, None)
    total = np.zeros(g.shape)
    piece_bad = atom_bad = gamma_bad = 0
    fj = band_pieces(f, fam)
    s33 = s36 = 0.0
    factor = atoms.system.enlargement
    for a in atoms:
        total += a.assembled.values
        wmask = a.W.mask(g)
        for p in a.pieces.values():
            if np.any(p.values[~wmask] != 0.0):
                piece_bad += 1
        peak = float(np.max(np.abs(a.assembled.values)))
        outside = np.abs(a.assembled.values[~a.W.enlarged_mask(g, factor)])
        if outside.size and peak > 0 and np.any(outside > support_rtol * peak):
            atom_bad += 1
        ref = recompute_gamma(a, fj, g)
        if abs(ref - a.gamma) > 1e-12 * max(ref, 1e-300):
            gamma_bad += 1
        vol = math.sqrt(a.W.volume(g.d))
        s33 += vol * math.sqrt(float(np.sum(a.assembled.values**2)) * g.cell_volume)
        s36 += vol * a.gamma
    residual = math.sqrt(float(np.sum((f.values - total) ** 2))) / fnorm
    h1 = h1_norm(f, fam)
    return DecompositionReport(
        residual=residual,
        piece_violations=piece_bad,
        atom_violations=atom_bad,
        gamma_mismatches=gamma_bad,
        orphans=atoms.system.orphans,
        const_33=s33 / h1,
        const_36=s36 / h1,
        omega_ratio=atoms.system.omega_ratio(),
        h1=h1,
        n_atoms=len(atoms),
        kappa_range=(atoms.kappas[0], atoms.kappas[-1]),
    )


REPORT_COLUMNS = (
    "kappa",
    "level",
    "cube_coords",
    "gamma",
    "tau_tilde_thick",
    "tau_thick",
    "tau_tilde_thin",
    "tau_thin",
    "l2_bW",
    "support_ok",
)


def atom_report_rows(atoms: AtomSet, lam: float, delta: float, support_rtol: float = 1e-9) -> list[tuple]:
    g = atoms.grid
    rows = []
    for a in atoms:
        tt, t = stopping_time(a, lam, delta, "annulus-thick")
        nt, n_ = stopping_time(a, lam, delta, "annulus-thin")
        peak = float(np.max(np.abs(a.assembled.values)))
        outside = np.abs(a.assembled.values[~a.W.enlarged_mask(g, atoms.system.enlargement)])
        ok = not (outside.size and peak > 0 and np.any(outside > support_rtol * peak))
        l2 = math.sqrt(float(np.sum(a.assembled.values**2)) * g.cell_volume)
        coords = ":".join(str(c) for c in a.W.coords)
        rows.append((a.kappa, a.level, coords, a.gamma, tt, t, nt, n_, l2, int(ok)))
    return sorted(rows, key=lambda r: (r[0], r[1], r[2]))


def atom_report_csv(atoms: AtomSet, lam: float, delta: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for row in atom_report_rows(atoms, lam, delta):
        w.writerow(["%.17g" % v if isinstance(v, float) else v for v in row])
    return buf.getvalue()
