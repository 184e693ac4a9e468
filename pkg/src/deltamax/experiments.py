"""Parameter sweeps behind the command-line harness.

Each subcommand maps an :class:`ExperimentConfig` to a :class:`SweepReport`
of ``(parameters..., metric, value)`` rows.  Every row can be recomputed on
its own through the matching ``*_point`` function, and rows are sorted
before writing so the CSV bytes depend only on the config.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .annulus import AnnulusSpec, annulus_measure, check_fits
from .atoms import (
    REGIMES,
    build_atoms,
    build_level_system,
    stopping_predicate,
    stopping_time,
    verify_decomposition,
)
from .grid import Field, GridSpec, level_measure, lp_norm, make_grid
from .littlewood_paley import BumpFamily, Psi_hat, build_bump_family, h1_norm
from .maximal import DilationRange, band_max, lacunary_max, strong_max
from .random_fields import band_limited_field, cube_bump, trial_rng
from .spectral import KernelCache, real_spectrum
from .special import annulus_fourier, decay_envelopes

SUBCOMMANDS = ("decay", "norms", "strong", "weaktype", "atoms", "banddecay")
DEFAULT_DELTAS = tuple(2.0**-e for e in range(2, 8))
DECAY_DELTAS = tuple(2.0**-e for e in range(2, 9))
DEFAULT_P = (4.0 / 3.0, 2.0, 4.0)
INPUT_CLASSES = ("band", "bump")

# Per-subcommand defaults for (d, n, box_length, k range, trials).
_DEFAULTS = {
    "decay": dict(d=2, n=256, box_length=128.0, k_range=None, trials=1, delta_list=DECAY_DELTAS),
    "norms": dict(d=2, n=256, box_length=128.0, k_range=(-1, 3), trials=20),
    "strong": dict(d=2, n=256, box_length=64.0, k_range=(-3, 3), trials=20),
    "weaktype": dict(d=2, n=256, box_length=128.0, k_range=(-1, 3), trials=20),
    "atoms": dict(d=2, n=256, box_length=256.0, k_range=None, trials=10, delta_list=(0.25,)),
    "banddecay": dict(d=2, n=0, box_length=0.0, k_range=None, trials=20, delta_list=(0.25,)),
}

# Radial sampling for the decay envelopes: rho in [1, 512], 64 points per unit.
DECAY_RHO = (1.0, 512.0, 64)
REGIME_J = (-12, 4)
REGIME_POINTS_PER_UNIT = 64
REGIME_MIN_POINTS = 4096
BAND_FMAX_CELLS = 1.0 / 4.0
STRONG_P = (2.0,)
ATOM_LAMBDAS = tuple(2.0**e for e in range(-8, 9, 2))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a sweep's output bytes."""

    subcommand: str
    d: int = 2
    n: int = 256
    box_length: float = 128.0
    delta_list: tuple[float, ...] = DEFAULT_DELTAS
    p_list: tuple[float, ...] = DEFAULT_P
    k_range: tuple[int, int] | None = None
    j_range: tuple[int, int] = (1, 6)
    lambda_points: int = 32
    seed: int = 0
    trials: int = 20
    out_path: str | None = None
    rule: str = "area"

    @classmethod
    def defaults(cls, subcommand: str, **overrides) -> ExperimentConfig:
        if subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {subcommand!r}")
        base = dict(_DEFAULTS[subcommand])
        if subcommand == "strong":
            base["p_list"] = STRONG_P
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(subcommand=subcommand, **base)

    def echo(self) -> str:
        """Canonical JSON used as the CSV provenance line."""
        data = asdict(self)
        data.pop("out_path")
        data["version"] = __version__
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    @property
    def grid(self) -> GridSpec:
        return make_grid(self.d, self.n, self.box_length)

    def dilation_range(self) -> DilationRange:
        if self.k_range is None:
            raise ValueError(f"{self.subcommand} needs a k range")
        return DilationRange.isotropic(self.d, *self.k_range)


@dataclass
class SweepReport:
    config: ExperimentConfig
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def add(self, *row) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row {row} does not match columns {self.columns}")
        self.rows.append(tuple(row))

    def value(self, metric: str, **params) -> float:
        """Look up one value by metric name and exact parameter match."""
        idx = {c: i for i, c in enumerate(self.columns)}
        for r in self.rows:
            if r[idx["metric"]] == metric and all(r[idx[k]] == v for k, v in params.items()):
                return r[idx["value"]]
        raise KeyError((metric, params))

    def values(self, metric: str, **params) -> list[tuple]:
        idx = {c: i for i, c in enumerate(self.columns)}
        return [
            r
            for r in self.rows
            if r[idx["metric"]] == metric and all(r[idx[k]] == v for k, v in params.items())
        ]

    def sorted_rows(self) -> list[list[str]]:
        ordered = sorted(self.rows, key=lambda r: tuple(_sort_key(v) for v in r))
        return [[_fmt(v) for v in r] for r in ordered]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# config: {self.config.echo()}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.sorted_rows())
        return buf.getvalue()


def _sort_key(v):
    # Numbers before labels; numbers by value, labels by text.
    if isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool):
        return (0, float(v), "")
    return (1, 0.0, str(v))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(report: SweepReport, path) -> None:
    """Write atomically so a failure never leaves a partial file."""
    path = Path(path)
    text = report.to_csv()
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# validation


def validate(cfg: ExperimentConfig) -> None:
    """Fail fast on any parameter that would make a sweep point meaningless."""
    if cfg.subcommand not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {cfg.subcommand!r}")
    for delta in cfg.delta_list:
        if not 0.0 < delta < 0.5:
            raise ValueError(f"delta={delta} must lie in (0, 1/2)")
    if not cfg.delta_list:
        raise ValueError("empty delta list")
    for p in cfg.p_list:
        if not (1.0 <= p < math.inf):
            raise ValueError(f"p={p} must be finite and >= 1")
    if cfg.trials < 1:
        raise ValueError("trials must be >= 1")
    if cfg.lambda_points < 2:
        raise ValueError("lambda-points must be >= 2")
    if cfg.rule not in ("centre", "area"):
        raise ValueError(f"unknown rule {cfg.rule!r}")
    if cfg.subcommand in ("decay", "banddecay"):
        if cfg.d < 2:
            raise ValueError("d must be >= 2")
        if cfg.subcommand == "banddecay" and cfg.j_range[0] < 1:
            raise ValueError("band indices must be >= 1")
        if cfg.subcommand == "banddecay" and cfg.j_range[0] > cfg.j_range[1]:
            raise ValueError("empty j range")
        return
    g = cfg.grid
    if cfg.subcommand in ("norms", "weaktype", "strong"):
        r = cfg.dilation_range()
        for delta in cfg.delta_list:
            for kv in r.vectors() if cfg.subcommand == "strong" else r.diagonal():
                check_fits(g, AnnulusSpec(g.d, delta, kv), cfg.rule)
    if cfg.subcommand == "atoms":
        build_bump_family(g)
        for v, what in ((g.spacing, "grid spacing"), (g.box_length, "box length")):
            if not math.log2(v).is_integer():
                raise ValueError(f"{what} {v} must be a power of two for dyadic cubes")


# ---------------------------------------------------------------------------
# inputs


def make_input(cfg: ExperimentConfig, cls: str, trial: int, g: GridSpec | None = None) -> Field:
    g = cfg.grid if g is None else g
    if cls == "band":
        return band_limited_field(g, trial_rng(cfg.seed, "band", trial), fmax=BAND_FMAX_CELLS / g.spacing)
    if cls == "bump":
        return cube_bump(g, trial_rng(cfg.seed, "bump", trial), min_side_cells=2, max_side_cells=g.n // 16)
    if cls == "noise":
        return band_limited_field(g, trial_rng(cfg.seed, "noise", trial))
    raise ValueError(f"unknown input class {cls!r}")


# ---------------------------------------------------------------------------
# decay


def decay_rho() -> np.ndarray:
    lo, hi, per = DECAY_RHO
    return np.linspace(lo, hi, int((hi - lo) * per) + 1)


def regime_bound(j: int, delta: float, d: int) -> float:
    return min(1.0, 2.0 ** (j * (d - 1) / 2.0), delta**-0.5 * 2.0 ** (j * d / 2.0))


def regime_sup(j: int, delta: float, d: int) -> float:
    """``sup_xi |Psi_hat(2^j xi) chi_hat(xi)| / |C|`` on a dense radial grid over the window support."""
    lo, hi = 2.0 ** (-j - 1), 2.0 ** (1 - j)
    count = max(REGIME_MIN_POINTS, int((hi - lo) * REGIME_POINTS_PER_UNIT))
    rho = np.linspace(lo, hi, count)
    vals = np.abs(Psi_hat(2.0**j * rho) * annulus_fourier(d, delta, rho)) / annulus_measure(d, delta)
    return float(vals.max())


def run_decay(cfg: ExperimentConfig) -> SweepReport:
    rep = SweepReport(cfg, ("d", "delta", "j", "metric", "value"))
    rho = decay_rho()
    envs = [decay_envelopes(cfg.d, delta, rho) for delta in cfg.delta_list]
    for e in envs:
        rep.add(cfg.d, e.delta, "", "envelope_a", e.envelope_a)
        rep.add(cfg.d, e.delta, "", "envelope_b", e.envelope_b)
        rep.add(cfg.d, e.delta, "", "interpolated", e.interpolated)
    a = [e.envelope_a for e in envs]
    rep.add(cfg.d, "all", "", "envelope_a_uniformity", max(a) / min(a))
    for delta in cfg.delta_list:
        worst = 0.0
        for j in range(REGIME_J[0], REGIME_J[1] + 1):
            s = regime_sup(j, delta, cfg.d)
            ratio = s / regime_bound(j, delta, cfg.d)
            worst = max(worst, ratio)
            rep.add(cfg.d, delta, j, "regime_sup", s)
            rep.add(cfg.d, delta, j, "regime_ratio", ratio)
        rep.add(cfg.d, delta, "all", "regime_constant", worst)
    return rep


# ---------------------------------------------------------------------------
# norms and strong


def _maximal(cfg: ExperimentConfig, f: Field, delta: float, cache: KernelCache) -> Field:
    r = cfg.dilation_range()
    if cfg.subcommand == "strong":
        return strong_max(f, delta, r, cfg.rule, cache)
    return lacunary_max(f, delta, r, cfg.rule, cache)


def norm_point(cfg: ExperimentConfig, cls: str, delta: float, p: float, trial: int, cache=None) -> float:
    """``||M f||_p / ||f||_p`` for one input."""
    cache = KernelCache(cfg.rule) if cache is None else cache
    f = make_input(cfg, cls, trial)
    return lp_norm(_maximal(cfg, f, delta, cache), p) / lp_norm(f, p)


def run_norms(cfg: ExperimentConfig) -> SweepReport:
    rep = SweepReport(cfg, ("class", "delta", "p", "trial", "metric", "value"))
    cache = KernelCache(cfg.rule)
    best: dict[tuple, float] = {}
    for cls in INPUT_CLASSES:
        for trial in range(cfg.trials):
            f = make_input(cfg, cls, trial)
            fn = {p: lp_norm(f, p) for p in cfg.p_list}
            for delta in cfg.delta_list:
                m = _maximal(cfg, f, delta, cache)
                for p in cfg.p_list:
                    ratio = lp_norm(m, p) / fn[p]
                    rep.add(cls, delta, p, trial, "ratio", ratio)
                    key = (cls, delta, p)
                    best[key] = max(best.get(key, 0.0), ratio)
    for cls in INPUT_CLASSES:
        for p in cfg.p_list:
            per_delta = [best[(cls, delta, p)] for delta in cfg.delta_list]
            for delta, v in zip(cfg.delta_list, per_delta):
                rep.add(cls, delta, p, "max", "norm", v)
            rep.add(cls, "all", p, "max", "uniformity", max(per_delta) / min(per_delta))
    return rep


# ---------------------------------------------------------------------------
# weak type


def lambda_grid(top: float, points: int) -> np.ndarray:
    """Geometric grid over ``[1e-3, 1] * top``."""
    return top * np.geomspace(1e-3, 1.0, points)


def weak_ratio(m: Field, h1: float, points: int) -> float:
    lams = lambda_grid(float(m.values.max()), points)
    return float(max(lam * level_measure(m, lam) for lam in lams)) / h1


def weak_point(cfg: ExperimentConfig, delta: float, trial: int, cache=None, fam=None) -> float:
    cache = KernelCache(cfg.rule) if cache is None else cache
    g = cfg.grid
    fam = build_bump_family(g) if fam is None else fam
    a = make_input(cfg, "bump", trial)
    return weak_ratio(lacunary_max(a, delta, cfg.dilation_range(), cfg.rule, cache), h1_norm(a, fam), cfg.lambda_points)


def run_weaktype(cfg: ExperimentConfig) -> SweepReport:
    rep = SweepReport(cfg, ("delta", "trial", "metric", "value"))
    cache = KernelCache(cfg.rule)
    g = cfg.grid
    fam = build_bump_family(g)
    r = cfg.dilation_range()
    best = {delta: 0.0 for delta in cfg.delta_list}
    for trial in range(cfg.trials):
        a = make_input(cfg, "bump", trial)
        h1 = h1_norm(a, fam)
        rep.add("", trial, "h1_norm", h1)
        for delta in cfg.delta_list:
            v = weak_ratio(lacunary_max(a, delta, r, cfg.rule, cache), h1, cfg.lambda_points)
            rep.add(delta, trial, "weak_ratio", v)
            best[delta] = max(best[delta], v)
    for delta, v in best.items():
        rep.add(delta, "max", "weak_constant", v)
    vals = list(best.values())
    rep.add("all", "max", "uniformity", max(vals) / min(vals))
    return rep


# ---------------------------------------------------------------------------
# atoms


@dataclass
class AtomTrial:
    report: object
    atoms: object
    minimality_failures: int
    checked: int


def atom_trial(cfg: ExperimentConfig, trial: int, fam: BumpFamily | None = None) -> AtomTrial:
    g = cfg.grid
    fam = build_bump_family(g) if fam is None else fam
    f = make_input(cfg, "band", trial)
    sysm = build_level_system(f, fam)
    atoms = build_atoms(sysm, f, fam)
    report = verify_decomposition(atoms, f, fam)
    fails = checked = 0
    delta = cfg.delta_list[0]
    for a in atoms:
        q_scale = math.sqrt(a.W.volume(g.d)) * a.gamma
        for lam in ATOM_LAMBDAS:
            for regime in REGIMES:
                tt, _ = stopping_time(a, lam, delta, regime)
                checked += 1
                q = q_scale / lam
                if tt == -math.inf:
                    ok = q == 0.0
                else:
                    ok = stopping_predicate(tt, a.level, q, delta, g.d, regime) and not stopping_predicate(
                        tt - 1, a.level, q, delta, g.d, regime
                    )
                fails += not ok
    return AtomTrial(report, atoms, fails, checked)


def run_atoms(cfg: ExperimentConfig) -> SweepReport:
    rep = SweepReport(cfg, ("trial", "kappa", "level", "cube", "metric", "value"))
    g = cfg.grid
    fam = build_bump_family(g)
    c33, c36, omega = [], [], []
    delta = cfg.delta_list[0]
    for trial in range(cfg.trials):
        t = atom_trial(cfg, trial, fam)
        r = t.report
        for name, v in (
            ("residual", r.residual),
            ("support_violations", r.support_violations),
            ("gamma_mismatches", r.gamma_mismatches),
            ("orphans", r.orphans),
            ("const_33", r.const_33),
            ("const_36", r.const_36),
            ("omega_ratio", r.omega_ratio),
            ("h1_norm", r.h1),
            ("n_atoms", r.n_atoms),
            ("stopping_minimality_failures", t.minimality_failures),
            ("pass", int(r.passed)),
        ):
            rep.add(trial, "", "", "", name, v)
        for a in t.atoms:
            cube = ":".join(str(c) for c in a.W.coords)
            rep.add(trial, a.kappa, a.level, cube, "gamma", a.gamma)
            for regime in REGIMES:
                tt, tau = stopping_time(a, 1.0, delta, regime)
                tag = regime.split("-")[1]
                rep.add(trial, a.kappa, a.level, cube, f"tau_tilde_{tag}", tt)
                rep.add(trial, a.kappa, a.level, cube, f"tau_{tag}", tau)
        c33.append(r.const_33)
        c36.append(r.const_36)
        omega.append(r.omega_ratio)
    rep.add("all", "", "", "", "const_33_spread", max(c33) / min(c33))
    rep.add("all", "", "", "", "const_36_spread", max(c36) / min(c36))
    rep.add("all", "", "", "", "omega_constant", max(omega))
    return rep


# ---------------------------------------------------------------------------
# band decay


def banddecay_grid(cfg: ExperimentConfig, j: int) -> GridSpec:
    """Unit-spacing grid just large enough for shells of radius ``2^{j+2}``."""
    need = 2.0 * 2.0 * (1.0 + max(cfg.delta_list)) * 2.0 ** (j + 2)
    n = max(64, 2 ** math.ceil(math.log2(need)))
    return make_grid(cfg.d, n, float(n))


def banddecay_range(cfg: ExperimentConfig, j: int) -> DilationRange:
    """Shell scales ``k_i in [j+1, j+2]``: the band ``2^{j-k}`` then sits below Nyquist."""
    return DilationRange.isotropic(cfg.d, j + 1, j + 2)


def band_point(cfg: ExperimentConfig, j: int, trial: int, cache=None) -> float:
    g = banddecay_grid(cfg, j)
    cache = KernelCache(cfg.rule) if cache is None else cache
    fam = build_bump_family(g)
    f = band_limited_field(g, trial_rng(cfg.seed, "noise", trial))
    m = band_max(f, (j,) * cfg.d, cfg.delta_list[0], banddecay_range(cfg, j), fam, cfg.rule, cache)
    return lp_norm(m, 2) / lp_norm(f, 2)


def run_banddecay(cfg: ExperimentConfig) -> SweepReport:
    rep = SweepReport(cfg, ("j", "trial", "metric", "value"))
    delta = cfg.delta_list[0]
    js = list(range(cfg.j_range[0], cfg.j_range[1] + 1))
    logs = []
    for j in js:
        g = banddecay_grid(cfg, j)
        fam = build_bump_family(g)
        cache = KernelCache(cfg.rule)
        r = banddecay_range(cfg, j)
        best = 0.0
        for trial in range(cfg.trials):
            f = band_limited_field(g, trial_rng(cfg.seed, "noise", trial))
            spec = real_spectrum(f)
            m = band_max(f, (j,) * cfg.d, delta, r, fam, cfg.rule, cache, spectrum=spec)
            v = lp_norm(m, 2) / lp_norm(f, 2)
            rep.add(j, trial, "ratio", v)
            best = max(best, v)
        rep.add(j, "max", "norm", best)
        rep.add(j, "max", "log2_norm", math.log2(best))
        logs.append(math.log2(best))
    slope = float(np.polyfit(np.asarray(js, dtype=float), np.asarray(logs), 1)[0]) if len(js) > 1 else math.nan
    rep.add("all", "fit", "slope", slope)
    return rep


_RUNNERS = {
    "decay": run_decay,
    "norms": run_norms,
    "strong": run_norms,
    "weaktype": run_weaktype,
    "atoms": run_atoms,
    "banddecay": run_banddecay,
}


def run_experiment(cfg: ExperimentConfig) -> SweepReport:
    """Validate, run the sweep, and write the CSV if ``cfg.out_path`` is set."""
    validate(cfg)
    report = _RUNNERS[cfg.subcommand](cfg)
    if cfg.out_path:
        write_csv(report, cfg.out_path)
    return report
