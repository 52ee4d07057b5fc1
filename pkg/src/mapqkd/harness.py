"""Configuration parsing, parameter sweeps, figure recipes and validation suites.

Config files are flat ``key = value`` text. Keys carry a section prefix
(``protocol.n``, ``memory.T_coherence``, ``sweep.stop`` ...); see
``CONFIG_KEYS`` for the full schema. Unknown keys are errors.
"""

from __future__ import annotations

import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import channels, optics, oracles, rates, waiting
from .core import ConfigurationError, ProtocolParams, derived_transmissions

DEFAULT_POINTS = 200
ALPHA_GRID = (0.5, 200.0)

# dotted config key -> ProtocolParams field
PARAM_KEYS = {
    "protocol.n": "n",
    "protocol.alpha": "alpha",
    "protocol.theta": "theta",
    "protocol.scheme": "scheme",
    "protocol.f_EC": "f_EC",
    "protocol.delta_phase": "delta_phase",
    "protocol.beta_asym": "beta_asym",
    "geometry.L_total": "L_total",
    "geometry.L_att": "L_att",
    "geometry.c_fiber": "c_fiber",
    "detector.kind": "detector",
    "detector.p_det": "p_det",
    "detector.dark_noclick_vacuum": "dark_noclick_vacuum",
    "detector.homodyne_windows": "homodyne_windows",
    "memory.T_coherence": "T_coherence",
    "memory.p_depol": "p_depol",
    "memory.cutoff_rounds": "cutoff_rounds",
    "memory.store_ends": "store_ends",
}
SWEEP_KEYS = ("sweep.var", "sweep.start", "sweep.stop", "sweep.points", "sweep.spacing", "sweep.grid",
              "sweep.comparators")
PIPELINE_KEYS = ("pipeline.swap_route", "pipeline.permutation_mode", "pipeline.average", "pipeline.pnrd_model",
                 "pipeline.clock")
PIPELINE_CHOICES = {
    "swap_route": ("teleport", "doubling"),
    "permutation_mode": ("none", "local", "all"),
    "average": ("conditioned", "plain"),
    "pnrd_model": ("nominal", "exact"),
}
CONFIG_KEYS = tuple(PARAM_KEYS) + SWEEP_KEYS + PIPELINE_KEYS + ("output.path",)

RATE_COLUMNS = ("L_km", "raw_rate", "skf", "skr_per_use", "skr_per_sec")


# --- comparators -----------------------------------------------------------

def _eta_total(params: ProtocolParams) -> float:
    return derived_transmissions(params).eta_total


def _root(k: int) -> Callable[[ProtocolParams], float]:
    return lambda params: _eta_total(params) ** (1.0 / k)


def _usd_per_station(params: ProtocolParams) -> float:
    return rates.usd_comparator(params)[0].skr_per_use


def _ours_per_station(params: ProtocolParams) -> float:
    return rates.usd_comparator(params)[1].skr_per_use


COMPARATORS: Dict[str, Callable[[ProtocolParams], float]] = {
    "plob": lambda params: rates.plob(_eta_total(params)) if _eta_total(params) < 1 else math.inf,
    "ideal_repeater_4seg": lambda params: rates.plob(_eta_total(params) ** 0.25)
    if _eta_total(params) < 1 else math.inf,
    "ideal_repeater_per_sec": lambda params: rates.ideal_repeater_per_second(
        params.L_total, params.L_att, params.c_fiber) if params.L_total > 0 else math.inf,
    "twin_field_ideal": lambda params: rates.twin_field_comparator(params.L_total, True, L_att=params.L_att),
    "twin_field_dark": lambda params: rates.twin_field_comparator(params.L_total, False, L_att=params.L_att),
    "twin_field_ideal_per_sec": lambda params: rates.TWIN_FIELD_CLOCK
    * rates.twin_field_comparator(params.L_total, True, L_att=params.L_att),
    "twin_field_dark_per_sec": lambda params: rates.TWIN_FIELD_CLOCK
    * rates.twin_field_comparator(params.L_total, False, L_att=params.L_att),
    "relay_per_sec": lambda params: rates.relay_comparator(params).skr_per_sec,
    "usd_per_station": _usd_per_station,
    "ours_per_station": _ours_per_station,
}
for _k in (2, 4, 6, 8, 12, 16, 32):
    COMPARATORS[f"root{_k}"] = _root(_k)


# --- sweep definition --------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    params: ProtocolParams
    sweep_var: str = "L_total"
    grid: Tuple[float, ...] = ()
    comparators: Tuple[str, ...] = ()
    output_path: Optional[str] = None
    pipeline: Dict[str, object] = field(default_factory=dict)
    clock: object = "communication_limited"

    def __post_init__(self):
        names = {f.name for f in fields(ProtocolParams)}
        if self.sweep_var not in names:
            raise ConfigurationError(f"{self.sweep_var!r} is not a parameter field", "sweep.var")
        if len(self.grid) == 0:
            raise ConfigurationError("grid is empty", "sweep.grid")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigurationError("grid must be strictly increasing", "sweep.grid")
        for name in self.comparators:
            if name not in COMPARATORS:
                raise ConfigurationError(f"unknown comparator {name!r}", "sweep.comparators")

    def columns(self) -> List[str]:
        lead = [] if self.sweep_var == "L_total" else [self.sweep_var]
        return lead + list(RATE_COLUMNS) + list(self.comparators)


def make_grid(start: float, stop: float, points: int = DEFAULT_POINTS, spacing: str = "linear") -> Tuple[float, ...]:
    if points < 1:
        raise ConfigurationError("need at least one point", "sweep.points")
    if spacing == "linear":
        return tuple(float(v) for v in np.linspace(start, stop, points))
    if spacing == "log":
        if start <= 0 or stop <= 0:
            raise ConfigurationError("log spacing needs positive bounds", "sweep.spacing")
        return tuple(float(v) for v in np.geomspace(start, stop, points))
    raise ConfigurationError(f"unknown spacing {spacing!r}", "sweep.spacing")


def _coerce(field_name: str, raw: str):
    text = raw.strip()
    low = text.lower()
    if low in ("none", "null", ""):
        return None
    if field_name in ("scheme", "detector"):
        return text
    if field_name == "store_ends":
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigurationError(f"expected a boolean, got {raw!r}", field_name)
    if field_name == "homodyne_windows":
        parts = [p for p in text.split(",") if p.strip()]
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigurationError(f"expected two numbers, got {raw!r}", field_name) from None
    if field_name in ("n", "cutoff_rounds"):
        try:
            value = float(text)
        except ValueError:
            raise ConfigurationError(f"expected an integer, got {raw!r}", field_name) from None
        if value != int(value):
            raise ConfigurationError(f"expected an integer, got {raw!r}", field_name)
        return int(value)
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"expected a number, got {raw!r}", field_name) from None


def parse_config_text(text: str) -> Dict[str, str]:
    """Split ``key = value`` lines; '#' starts a comment."""
    entries: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key", key)
        if key in entries:
            raise ConfigurationError(f"line {lineno}: duplicate key", key)
        entries[key] = value
    return entries


def spec_from_entries(entries: Dict[str, str]) -> SweepSpec:
    values = {}
    for key, name in PARAM_KEYS.items():
        if key in entries:
            values[name] = _coerce(name, entries[key])
    try:
        params = ProtocolParams(**values)
    except ConfigurationError as exc:
        # report with the dotted key the user wrote
        dotted = next((k for k, v in PARAM_KEYS.items() if v == exc.field_name), exc.field_name)
        raise ConfigurationError(str(exc).split(": ", 1)[-1], dotted) from None

    var = entries.get("sweep.var", "L_total")
    if "sweep.grid" in entries:
        try:
            grid = tuple(float(v) for v in entries["sweep.grid"].split(",") if v.strip())
        except ValueError:
            raise ConfigurationError("grid values must be numbers", "sweep.grid") from None
    else:
        try:
            start = float(entries.get("sweep.start", 1.0))
            stop = float(entries.get("sweep.stop", 1000.0))
            points = int(entries.get("sweep.points", DEFAULT_POINTS))
        except ValueError:
            raise ConfigurationError("sweep bounds must be numbers", "sweep") from None
        grid = make_grid(start, stop, points, entries.get("sweep.spacing", "linear"))
    comparators = tuple(c.strip() for c in entries.get("sweep.comparators", "").split(",") if c.strip())

    pipeline = {}
    for key in PIPELINE_KEYS[:-1]:
        if key in entries:
            name = key.split(".", 1)[1]
            if entries[key] not in PIPELINE_CHOICES[name]:
                raise ConfigurationError(f"must be one of {PIPELINE_CHOICES[name]}, got {entries[key]!r}", key)
            pipeline[name] = entries[key]
    clock: object = "communication_limited"
    if "pipeline.clock" in entries and entries["pipeline.clock"] != "communication_limited":
        try:
            clock = float(entries["pipeline.clock"])
        except ValueError:
            raise ConfigurationError("clock must be a rate in Hz or communication_limited",
                                     "pipeline.clock") from None
    return SweepSpec(params, var, grid, comparators, entries.get("output.path"), pipeline, clock)


def load_config(path: str) -> SweepSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_entries(parse_config_text(fh.read()))


# --- evaluation ----------------------------------------------------------------

def _coerce_sweep_value(name: str, value: float):
    return int(round(value)) if name in ("n", "cutoff_rounds") else value


def evaluate_point(params: ProtocolParams, comparators: Sequence[str] = (), pipeline=None,
                   clock="communication_limited") -> Tuple[rates.RatePoint, Dict[str, float]]:
    point = rates.skr_per_second(params, clock, **(pipeline or {}))
    eta = _eta_total(params)
    bench = rates.benchmarks(eta, range(1, params.n + 1)) if eta > 0 else {}
    point = rates.RatePoint(point.L_km, point.raw_rate, point.skf, point.skr_per_use, point.skr_per_sec,
                            point.acceptance_fraction, bench)
    extra = {name: float(COMPARATORS[name](params)) for name in comparators}
    return point, extra


def _row_task(args):
    spec, value = args
    params = spec.params.replace(**{spec.sweep_var: _coerce_sweep_value(spec.sweep_var, value)})
    point, extra = evaluate_point(params, spec.comparators, spec.pipeline, spec.clock)
    return value, point, extra


def run_sweep(spec: SweepSpec, jobs: int = 1) -> List[dict]:
    """One row per grid value, in grid order."""
    tasks = [(spec, v) for v in spec.grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_row_task, tasks))
    else:
        results = [_row_task(t) for t in tasks]
    rows = []
    for value, point, extra in results:
        row = {}
        if spec.sweep_var != "L_total":
            row[spec.sweep_var] = value
        row.update(L_km=point.L_km, raw_rate=point.raw_rate, skf=point.skf,
                   skr_per_use=point.skr_per_use, skr_per_sec=point.skr_per_sec)
        row.update(extra)
        rows.append(row)
    return rows


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    return f"{float(value):.12g}"


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(format_value(row[c]) for c in columns) + "\n")
    return buf.getvalue()


def write_csv(path: str, rows: Sequence[dict], columns: Sequence[str]) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(rows_to_csv(rows, columns))


def optimize_alpha(spec: SweepSpec, points: int = DEFAULT_POINTS, bounds=ALPHA_GRID) -> List[dict]:
    """Per grid value, the alpha on a log grid that maximises the key rate per use."""
    alphas = np.geomspace(bounds[0], bounds[1], points)
    rows = []
    for value in spec.grid:
        base = spec.params.replace(**{spec.sweep_var: _coerce_sweep_value(spec.sweep_var, value)})
        best_alpha, best = float(alphas[0]), None
        for a in alphas:
            point = rates.skr_per_second(base.replace(alpha=float(a)), spec.clock, **spec.pipeline)
            if best is None or point.skr_per_use > best.skr_per_use:
                best_alpha, best = float(a), point
        row = {} if spec.sweep_var == "L_total" else {spec.sweep_var: value}
        row.update(L_km=best.L_km, alpha=best_alpha, raw_rate=best.raw_rate, skf=best.skf,
                   skr_per_use=best.skr_per_use, skr_per_sec=best.skr_per_sec)
        rows.append(row)
    return rows


def first_crossing(xs: Sequence[float], ys: Sequence[float], ref: Sequence[float]) -> Optional[float]:
    """First x where ``ys`` rises above ``ref``, interpolated linearly in log ratio."""
    xs, ys, ref = (np.asarray(v, dtype=float) for v in (xs, ys, ref))
    with np.errstate(divide="ignore"):
        gap = np.log(np.maximum(ys, 1e-300)) - np.log(ref)
    for i in range(1, len(xs)):
        if gap[i - 1] <= 0 < gap[i]:
            return float(xs[i - 1] + (xs[i] - xs[i - 1]) * (-gap[i - 1]) / (gap[i] - gap[i - 1]))
    return None


# --- figure recipes --------------------------------------------------------------

# loss and memory dephasing only
LOSS_AND_MEMORY = dict(p_det=1.0, dark_noclick_vacuum=1.0, p_depol=0.0)
FIG5_ALPHAS = {2: 30.0, 3: 23.9, 4: 23.9, 6: 18.0, 8: 17.0, 16: 9.0}
FIG3_CUTOFF = 1000
PHASE_DELTAS = (0.0, 1e-4, 1e-3, 5e-3, 7.5e-3)


@dataclass(frozen=True)
class Curve:
    name: str
    spec: SweepSpec


def _distance_grid(stop: float, start: float = 1.0, points: int = DEFAULT_POINTS) -> Tuple[float, ...]:
    return make_grid(start, stop, points)


def figure_recipes(figure_id: str, points: int = DEFAULT_POINTS) -> List[Curve]:
    """Curve definitions for one figure. Comparators ride on the first curve."""
    base = ProtocolParams()
    if figure_id == "fig2":
        grid = _distance_grid(1000.0, points=points)
        p = base.replace(n=2, T_coherence=1.0)
        curves = [Curve("no_cutoff", SweepSpec(p, grid=grid, comparators=("plob", "root2", "root4")))]
        for m in (10, 100, 1000, 10000):
            curves.append(Curve(f"cutoff_{m}", SweepSpec(p.replace(cutoff_rounds=m), grid=grid)))
        return curves
    if figure_id == "fig3":
        grid = _distance_grid(1500.0, points=points)
        p = base.replace(T_coherence=10.0, **LOSS_AND_MEMORY)
        curves = []
        for n in (2, 3, 4):
            comps = ("plob", "root2", "root4", "root6", "root8") if n == 2 else ()
            curves.append(Curve(f"n{n}", SweepSpec(p.replace(n=n), grid=grid, comparators=comps)))
        curves.append(Curve(f"n2_cutoff_{FIG3_CUTOFF}", SweepSpec(p.replace(n=2, cutoff_rounds=FIG3_CUTOFF), grid=grid)))
        return curves
    if figure_id == "fig4":
        grid = _distance_grid(1000.0, points=points)
        curves = []
        for p_det in (0.15, 1.0):
            for T in (1.0, 10.0, 100.0, 1000.0, math.inf):
                comps = ("plob", "root2", "root4", "twin_field_ideal") if not curves else ()
                p = base.replace(n=2, p_det=p_det, T_coherence=T)
                curves.append(Curve(f"pdet{p_det:g}_T{T:g}", SweepSpec(p, grid=grid, comparators=comps)))
        return curves
    if figure_id == "fig5":
        grid = _distance_grid(2000.0, points=points)
        p = base.replace(p_det=1.0, dark_noclick_vacuum=1 - rates.TWIN_FIELD_DARK, T_coherence=10.0, p_depol=1e-3)
        curves = []
        for n, alpha in FIG5_ALPHAS.items():
            comps = ("twin_field_ideal_per_sec", "twin_field_dark_per_sec", "ideal_repeater_per_sec") \
                if not curves else ()
            curves.append(Curve(f"n{n}", SweepSpec(p.replace(n=n, alpha=alpha), grid=grid, comparators=comps)))
        return curves
    if figure_id == "fig6":
        grid = _distance_grid(800.0, points=points)
        p = base.replace(n=2, p_det=1.0)
        curves = []
        for T in (0.1, 1.0, 10.0):
            for m in (10, 100, 1000):
                comps = ("twin_field_ideal_per_sec", "relay_per_sec") if not curves else ()
                spec = SweepSpec(p.replace(T_coherence=T, cutoff_rounds=m), grid=grid, comparators=comps)
                curves.append(Curve(f"T{T:g}_cutoff_{m}", spec))
        return curves
    if figure_id == "fig7":
        grid = _distance_grid(800.0, points=points)
        p = base.replace(T_coherence=10.0, p_depol=1e-3)
        return [Curve(f"n{n}", SweepSpec(p.replace(n=n), grid=grid,
                                         comparators=("usd_per_station", "ours_per_station", "plob")))
                for n in (2, 3, 4)]
    if figure_id == "fig8":
        grid = _distance_grid(1500.0, points=points)
        p = base.replace(**LOSS_AND_MEMORY)
        curves = []
        for scheme in ("sequential", "parallel"):
            for n in (2, 3, 4):
                for T in (math.inf, 10.0):
                    comps = ("plob", "root2", "root4", "root6", "root8") if not curves else ()
                    spec = SweepSpec(p.replace(n=n, scheme=scheme, T_coherence=T), grid=grid, comparators=comps)
                    curves.append(Curve(f"{scheme}_n{n}_T{T:g}", spec))
        return curves
    raise ConfigurationError(f"unknown figure id {figure_id!r}", "figure_id")


def _phase_panel_rows(points: int) -> Dict[str, List[dict]]:
    """Key fraction vs distance for each mismatch width and three memory settings."""
    grid = _distance_grid(600.0, start=1.0, points=points)
    base = ProtocolParams(n=2)
    tables: Dict[str, List[dict]] = {}
    for memory in ("ideal", "T10EM", "T1EM"):
        rows = []
        for L in grid:
            row = {"L_km": L}
            for delta in PHASE_DELTAS:
                params = base.replace(L_total=L, delta_phase=delta)
                if memory != "ideal":
                    row_T = _coherence_for_panel(params, 10.0 if memory == "T10EM" else 1.0)
                    params = params.replace(T_coherence=row_T)
                row[f"skf_delta_{delta:g}"] = rates.skr_per_channel_use(params).skf
            rows.append(row)
        tables[memory] = rows
    return tables


def _coherence_for_panel(params: ProtocolParams, multiple: float) -> float:
    """T = multiple * E[M] * tau for the mismatch-free success probability."""
    _, p, _ = rates.segment_bell_mix(params.replace(delta_phase=0.0))
    tau = rates.round_time(params)
    if p <= 0 or tau <= 0:
        return math.inf
    return multiple * waiting.expected_parallel_dephasing_rounds(2, p, params.store_ends) * tau


FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "phase_panel")


def run_figure(figure_id: str, out_dir: Optional[str] = None, jobs: int = 1,
               points: int = DEFAULT_POINTS) -> Dict[str, List[dict]]:
    """Compute every curve of a figure; with ``out_dir`` write ``<id>_<curve>.csv`` files."""
    tables: Dict[str, List[dict]] = {}
    columns: Dict[str, List[str]] = {}
    if figure_id == "phase_panel":
        tables = _phase_panel_rows(points)
        cols = ["L_km"] + [f"skf_delta_{d:g}" for d in PHASE_DELTAS]
        columns = {name: cols for name in tables}
    else:
        for curve in figure_recipes(figure_id, points):
            tables[curve.name] = run_sweep(curve.spec, jobs)
            columns[curve.name] = curve.spec.columns()
    if out_dir is not None:
        for name, rows in tables.items():
            write_csv(os.path.join(out_dir, f"{figure_id}_{name}.csv"), rows, columns[name])
    return tables


# --- validation suites --------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "observed": self.observed,
                "tolerance": self.tolerance, "detail": self.detail}


def _mc_check(name: str, exact: float, estimate: float, se: float, sigmas: float = 3.0) -> CheckResult:
    dev = abs(estimate - exact)
    z = dev / se if se > 0 else (0.0 if dev == 0 else math.inf)
    return CheckResult(name, z <= sigmas, z, sigmas, f"exact={exact:.10g} mc={estimate:.10g} se={se:.3g}")


def validate_oracle_mc(seed: int = 0, trials: int = 1_000_000) -> List[CheckResult]:
    """Waiting-time closed forms against direct sampling, 3 sigma."""
    out = []
    for n, p in ((2, 0.5), (3, 0.2), (4, 0.05)):
        mc = waiting.monte_carlo_waiting(n, p, 1.0, math.inf, "parallel", None, trials, seed)
        out.append(_mc_check(f"expected_max n={n} p={p}", waiting.expected_max_geometric(n, p),
                             mc.expected_rounds, mc.expected_rounds_se))
    p, tau, T = 0.05, 1.0, 50.0
    for m in (None, 10, 100):
        exact = waiting.dephasing_expectation_parallel_n2(p, tau, T, m)
        mc = waiting.monte_carlo_waiting(2, p, tau, T, "parallel", m, trials, seed + 1)
        out.append(_mc_check(f"n2 dephasing cutoff={m}", exact.dephasing_expectation,
                             mc.dephasing_expectation, mc.dephasing_expectation_se))
        if m is not None:
            out.append(_mc_check(f"n2 acceptance cutoff={m}", exact.acceptance_fraction,
                                 mc.acceptance_fraction, mc.acceptance_fraction_se))
            out.append(_mc_check(f"n2 expected rounds cutoff={m}", exact.expected_rounds,
                                 mc.expected_rounds, mc.expected_rounds_se))
    for n in (2, 3):
        exact = waiting.dephasing_expectation_sequential(n, p, tau, T)
        mc = waiting.monte_carlo_waiting(n, p, tau, T, "sequential", None, trials, seed + 2)
        out.append(_mc_check(f"sequential dephasing n={n}", exact.dephasing_expectation,
                             mc.dephasing_expectation, mc.dephasing_expectation_se))
    return out


FOCK_GRID = dict(alpha=(0.3, 1.0, 2.0), theta=(0.2, 0.7, 1.3), sqrt_eta=(0.3, 0.6, 0.9),
                 dark_noclick=(1.0, 0.9))


def validate_oracle_fock(tolerance: float = 1e-8) -> List[CheckResult]:
    """Closed-form on/off state against the truncated Fock-space simulation."""
    out = []
    for alpha in FOCK_GRID["alpha"]:
        for theta in FOCK_GRID["theta"]:
            for se in FOCK_GRID["sqrt_eta"]:
                for d0 in FOCK_GRID["dark_noclick"]:
                    params = ProtocolParams(n=1, alpha=alpha, theta=theta, dark_noclick_vacuum=d0)
                    closed = optics.conditional_state_onoff(params, se).matrix()
                    brute = oracles.fock_segment_matrix(alpha, alpha, theta, se, se, d0)
                    dev = float(np.max(np.abs(closed - brute)))
                    out.append(CheckResult(f"fock alpha={alpha} theta={theta} sqrt_eta={se} D0={d0}",
                                           dev <= tolerance, dev, tolerance))
    return out


def harmonic_identity_holds(n: int) -> bool:
    total = sum(Fraction(math.comb(n, j) * (-1) ** (j + 1), j) for j in range(1, n + 1))
    return total == sum(Fraction(1, k) for k in range(1, n + 1))


def validate_closed_forms(tolerance: float = 1e-10) -> List[CheckResult]:
    """Pipeline against the loss-only closed forms plus exact algebraic identities."""
    out = []
    loss_only = ProtocolParams(p_det=1.0, dark_noclick_vacuum=1.0, p_depol=0.0, T_coherence=math.inf)
    for n in (1, 2, 4):
        worst = 0.0
        for L in np.linspace(20.0, 800.0, 20):
            params = loss_only.replace(n=n, L_total=float(L))
            closed = rates.loss_only_rate(params)
            piped = rates.skr_per_channel_use(params).skr_per_use
            worst = max(worst, abs(closed - piped) / max(closed, 1e-300))
        out.append(CheckResult(f"loss-only pipeline n={n}", worst <= tolerance, worst, tolerance, "relative"))

    worst = 0.0
    for se in (0.05, 0.3, 0.8):
        params = loss_only.replace(n=1)
        mix = channels.erase_offdiagonals(optics.conditional_state_onoff(params, se))
        coh = math.exp(-2 * (2 - se) * params.x)
        worst = max(worst, abs(mix.pPsiMinus - 0.5 * (1 + coh)), abs(mix.pPsiPlus - 0.5 * (1 - coh)))
    out.append(CheckResult("two-Bell loss-only mixture", worst <= 1e-12, worst, 1e-12))

    bad = [n for n in range(1, 65) if not harmonic_identity_holds(n)]
    out.append(CheckResult("harmonic identity n<=64", not bad, float(len(bad)), 0.0, f"failures={bad}"))

    state = optics.conditional_state_onoff(ProtocolParams(n=1, alpha=1.1, theta=0.6, dark_noclick_vacuum=0.95), 0.7)
    rho = oracles.table_to_computational(state.normalized_matrix())
    brute = oracles.computational_to_table(oracles.brute_force_swap(rho, rho, 0))
    brute = brute / np.trace(brute).real
    rec = channels.swap_recursion_dark(state, 1).normalized_matrix()
    dev = float(np.max(np.abs(brute - rec)))
    out.append(CheckResult("swap recursion vs four-qubit model", dev <= 1e-12, dev, 1e-12))

    sym = ProtocolParams(n=2, L_total=300.0, p_det=1.0, dark_noclick_vacuum=1.0, beta_asym=0.5)
    a = optics.conditional_state_asymmetric(sym).matrix()
    b = optics.conditional_state_onoff(sym).matrix()
    dev = float(np.max(np.abs(a - b)))
    out.append(CheckResult("asymmetric state at beta=1/2", dev <= 1e-12, dev, 1e-12))
    return out


VALIDATION_SUITES = ("oracle_mc", "oracle_fock", "closed_forms")


def run_validation(suite: str, seed: int = 0, trials: int = 1_000_000) -> dict:
    """Machine-readable report; failing checks are entries, not exceptions."""
    start = time.perf_counter()
    if suite == "oracle_mc":
        checks = validate_oracle_mc(seed, trials)
    elif suite == "oracle_fock":
        checks = validate_oracle_fock()
    elif suite == "closed_forms":
        checks = validate_closed_forms()
    else:
        raise ConfigurationError(f"unknown suite {suite!r}", "suite")
    return {
        "suite": suite,
        "seed": seed,
        "passed": all(c.passed for c in checks),
        "elapsed_s": round(time.perf_counter() - start, 3),
        "checks": [c.as_dict() for c in checks],
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"
