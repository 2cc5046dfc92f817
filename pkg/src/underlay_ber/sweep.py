"""Experiment grids: TOML configuration, sweep execution and CSV output.

Configuration grammar (TOML; every key optional except ``grid.mu_db``)::

    seed = 1                         # unsigned 64-bit, Monte-Carlo seed
    output = "results.csv"
    alpha = 3.0                      # path-loss exponent

    [topology]                       # defaults: the example unit-square network
    primary = [0.7, 0.5]
    source = [0.0, 0.0]
    destination = [1.0, 0.0]
    relays = [[0.6, 0.2], [0.8, 0.3]]

    [grid]
    mu_db = [0, 5, 10, 15, 20]       # I_T / N0 in dB
    modulations = [2, 4]             # QAM orders
    hop_counts = [2, 3]
    l_p = ["perfect", 1]             # pilot counts, or "perfect" for exact CSI
    pilot_power = 2.5                # optional; default is I_T / eta_tP per link

    [grid.relay_paths]               # optional; default: first N-1 relays
    2 = [0]                          # relay indices used by the 2-hop chain
    3 = [0, 1]

    [mc]
    block_length = 100
    min_bit_errors = 100
    max_blocks = 1000000
    streams = 1
    chunk_blocks = 1000
"""
from __future__ import annotations

import csv
import io
import logging
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .analytic import ModParams, chain_ber
from .channel import (
    DEFAULT_DESTINATION,
    DEFAULT_PRIMARY,
    DEFAULT_RELAYS,
    DEFAULT_SOURCE,
    EstimatorConfig,
    Point,
    Topology,
    build_chain_params,
    db_to_linear,
)
from .simulator import SimConfig, estimate_ber

__all__ = [
    "ConfigError",
    "SweepConfig",
    "Row",
    "CSV_HEADER",
    "load_config",
    "parse_config",
    "run_sweep",
    "write_csv",
    "format_csv",
    "gnuplot_script",
]

log = logging.getLogger(__name__)

CSV_HEADER = (
    "mu_db,M,n_hops,L_p,ber_analytic,ber_sim,sim_stderr,bits,errors,intf_exceedance,status"
)
PERFECT = "perfect"

LpValue = Union[int, str]


class ConfigError(ValueError):
    """Configuration could not be parsed or violates the grid invariants."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class SweepConfig:
    mu_db_grid: tuple[float, ...]
    primary: Point = DEFAULT_PRIMARY
    source: Point = DEFAULT_SOURCE
    destination: Point = DEFAULT_DESTINATION
    relays: tuple[Point, ...] = DEFAULT_RELAYS
    alpha: float = 3.0
    modulations: tuple[int, ...] = (2,)
    hop_counts: tuple[int, ...] = (2,)
    relay_paths: dict = field(default_factory=dict)
    l_p_grid: tuple[LpValue, ...] = (1,)
    pilot_power: Optional[float] = None
    block_length: int = 100
    min_bit_errors: int = 100
    max_blocks: int = 1_000_000
    streams: int = 1
    chunk_blocks: int = 1000
    seed: int = 0
    output_path: str = "ber_sweep.csv"

    def topology(self, n_hops: int) -> Topology:
        path = self.relay_paths.get(n_hops, tuple(range(n_hops - 1)))
        chain = (self.source, *(self.relays[i] for i in path), self.destination)
        return Topology(self.primary, chain)

    def estimator(self, l_p: LpValue) -> EstimatorConfig:
        if l_p == PERFECT:
            return EstimatorConfig.perfect_csi()
        return EstimatorConfig(l_p=int(l_p), pilot_power=self.pilot_power)

    def grid(self) -> list[tuple[float, int, int, LpValue]]:
        """All ``(mu_db, M, n_hops, l_p)`` tuples in output order."""
        return [
            (mu_db, m, n, l_p)
            for n in self.hop_counts
            for l_p in self.l_p_grid
            for m in self.modulations
            for mu_db in self.mu_db_grid
        ]


_TOP_KEYS = {"seed", "output", "alpha", "topology", "grid", "mc"}
_TOPO_KEYS = {"primary", "source", "destination", "relays"}
_GRID_KEYS = {"mu_db", "modulations", "hop_counts", "l_p", "pilot_power", "relay_paths"}
_MC_KEYS = {"block_length", "min_bit_errors", "max_blocks", "streams", "chunk_blocks"}


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _point(value: Any, where: str, problems: list[str]) -> Optional[Point]:
    if isinstance(value, list) and len(value) == 2 and all(_is_number(v) for v in value):
        return Point(float(value[0]), float(value[1]))
    problems.append(f"{where}: expected [x, y] with finite numbers, got {value!r}")
    return None


def _pos_int(table: dict, key: str, where: str, problems: list[str], default: int) -> int:
    v = table.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        problems.append(f"{where}.{key}: expected a positive integer, got {v!r}")
        return default
    return v


def _list(table: dict, key: str, where: str, problems: list[str], default=None) -> list:
    if key not in table:
        if default is None:
            problems.append(f"{where}.{key}: required")
            return []
        return list(default)
    v = table[key]
    if not isinstance(v, list):
        problems.append(f"{where}.{key}: expected a list, got {v!r}")
        return []
    if not v:
        problems.append(f"{where}.{key}: must not be empty")
    return v


def _unknown(table: dict, allowed: set, where: str, problems: list[str]) -> None:
    for k in sorted(set(table) - allowed):
        problems.append(f"{where}: unknown key {k!r}")


def parse_config(data: dict) -> SweepConfig:
    """Validate a decoded TOML document; every problem is reported at once."""
    problems: list[str] = []
    _unknown(data, _TOP_KEYS, "<root>", problems)
    kw: dict[str, Any] = {}

    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        problems.append(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    else:
        kw["seed"] = seed
    if "output" in data:
        if isinstance(data["output"], str) and data["output"]:
            kw["output_path"] = data["output"]
        else:
            problems.append(f"output: expected a non-empty string, got {data['output']!r}")
    alpha = data.get("alpha", 3.0)
    if _is_number(alpha) and alpha > 0:
        kw["alpha"] = float(alpha)
    else:
        problems.append(f"alpha: expected a positive number, got {alpha!r}")

    topo = data.get("topology", {})
    if not isinstance(topo, dict):
        problems.append("topology: expected a table")
        topo = {}
    _unknown(topo, _TOPO_KEYS, "topology", problems)
    for key in ("primary", "source", "destination"):
        if key in topo:
            p = _point(topo[key], f"topology.{key}", problems)
            if p is not None:
                kw[key] = p
    n_relays = len(DEFAULT_RELAYS)
    if "relays" in topo:
        raw = topo["relays"]
        if not isinstance(raw, list):
            problems.append("topology.relays: expected a list of [x, y] points")
            raw = []
        pts = [_point(r, f"topology.relays[{i}]", problems) for i, r in enumerate(raw)]
        kw["relays"] = tuple(p for p in pts if p is not None)
        n_relays = len(raw)

    grid = data.get("grid", {})
    if not isinstance(grid, dict):
        problems.append("grid: expected a table")
        grid = {}
    _unknown(grid, _GRID_KEYS, "grid", problems)
    mu_db = _list(grid, "mu_db", "grid", problems)
    if all(_is_number(v) for v in mu_db):
        kw["mu_db_grid"] = tuple(float(v) for v in mu_db)
    else:
        problems.append(f"grid.mu_db: expected finite numbers, got {mu_db!r}")
    mods = _list(grid, "modulations", "grid", problems, default=[2])
    for m in mods:
        if isinstance(m, bool) or not isinstance(m, int) or m < 2 or m & (m - 1) or m > 1024:
            problems.append(f"grid.modulations: {m!r} is not a QAM order 2..1024 (power of two)")
    kw["modulations"] = tuple(mods)
    hop_counts = _list(grid, "hop_counts", "grid", problems, default=[2])
    for n in hop_counts:
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            problems.append(f"grid.hop_counts: {n!r} is not a positive integer")
    kw["hop_counts"] = tuple(hop_counts)
    l_ps = _list(grid, "l_p", "grid", problems, default=[1])
    for v in l_ps:
        if v != PERFECT and (isinstance(v, bool) or not isinstance(v, int) or v < 1):
            problems.append(f"grid.l_p: {v!r} is neither a positive integer nor 'perfect'")
    kw["l_p_grid"] = tuple(l_ps)
    if "pilot_power" in grid:
        pp = grid["pilot_power"]
        if _is_number(pp) and pp > 0:
            kw["pilot_power"] = float(pp)
        else:
            problems.append(f"grid.pilot_power: expected a positive number, got {pp!r}")

    paths: dict[int, tuple[int, ...]] = {}
    raw_paths = grid.get("relay_paths", {})
    if not isinstance(raw_paths, dict):
        problems.append("grid.relay_paths: expected a table")
        raw_paths = {}
    for key, path in raw_paths.items():
        try:
            n = int(key)
        except ValueError:
            problems.append(f"grid.relay_paths: key {key!r} is not a hop count")
            continue
        if not isinstance(path, list) or len(path) != n - 1:
            problems.append(f"grid.relay_paths.{key}: expected {n - 1} relay indices")
            continue
        if not all(isinstance(i, int) and 0 <= i < n_relays for i in path):
            problems.append(f"grid.relay_paths.{key}: indices must lie in 0..{n_relays - 1}")
            continue
        paths[n] = tuple(path)
    kw["relay_paths"] = paths
    for n in hop_counts:
        if isinstance(n, int) and n >= 1 and n not in paths and n - 1 > n_relays:
            problems.append(
                f"grid.hop_counts: {n} hops need {n - 1} relays but only {n_relays} are defined"
            )

    mc = data.get("mc", {})
    if not isinstance(mc, dict):
        problems.append("mc: expected a table")
        mc = {}
    _unknown(mc, _MC_KEYS, "mc", problems)
    defaults = SweepConfig.__dataclass_fields__
    for key in sorted(_MC_KEYS):
        kw[key] = _pos_int(mc, key, "mc", problems, defaults[key].default)

    if problems:
        raise ConfigError(problems)
    cfg = SweepConfig(**kw)
    topo_problems = []
    for n in cfg.hop_counts:
        try:
            cfg.topology(n)
        except ValueError as exc:
            topo_problems.append(f"topology for {n} hops: {exc}")
    if topo_problems:
        raise ConfigError(topo_problems)
    return cfg


def load_config(path: Union[str, Path]) -> SweepConfig:
    """Read and validate a TOML sweep configuration."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return parse_config(data)


@dataclass
class Row:
    mu_db: float
    m: int
    n_hops: int
    l_p: LpValue
    ber_analytic: Optional[float] = None
    ber_sim: Optional[float] = None
    sim_stderr: Optional[float] = None
    bits: Optional[int] = None
    errors: Optional[int] = None
    intf_exceedance: Optional[float] = None
    status: str = "ok"

    def failed(self) -> bool:
        return self.status.startswith("error")


def _evaluate(
    cfg: SweepConfig, point: tuple, analytic: bool, simulate: bool
) -> Row:
    mu_db, m, n_hops, l_p = point
    row = Row(mu_db, m, n_hops, l_p)
    notes = []
    try:
        mu = db_to_linear(mu_db)
        topo = cfg.topology(n_hops)
        est = cfg.estimator(l_p)
        if analytic:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                _, row.ber_analytic = chain_ber(
                    build_chain_params(topo, cfg.alpha, mu, est), ModParams.from_order(m)
                )
            if caught:
                notes.append("clamped")
        if simulate:
            sim = SimConfig(
                topology=topo,
                alpha=cfg.alpha,
                mu=mu,
                m=m,
                estimator=est,
                block_length=cfg.block_length,
                min_bit_errors=cfg.min_bit_errors,
                max_blocks=cfg.max_blocks,
                seed=cfg.seed,
                streams=cfg.streams,
                chunk_blocks=cfg.chunk_blocks,
            )
            res = estimate_ber(sim)
            row.ber_sim = res.ber
            row.sim_stderr = res.stderr
            row.bits = res.bits
            row.errors = res.errors
            row.intf_exceedance = res.interference_exceedance
            if res.budget_exhausted:
                notes.append("budget_exhausted")
    except (ArithmeticError, ValueError) as exc:
        log.error("grid point %s failed: %s", point, exc)
        row.status = f"error: {exc}"
        return row
    row.status = ";".join(notes) if notes else "ok"
    return row


def run_sweep(
    cfg: SweepConfig, analytic: bool = True, simulate: bool = True, workers: int = 1
) -> list[Row]:
    """Evaluate every grid point; rows come back in :meth:`SweepConfig.grid` order.

    Each point uses ``cfg.seed`` for its simulator, so points share common
    random numbers.
    """
    points = cfg.grid()
    if workers <= 1:
        return [_evaluate(cfg, p, analytic, simulate) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: _evaluate(cfg, p, analytic, simulate), points))


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_csv(rows: Sequence[Row]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for r in rows:
        writer.writerow(
            _fmt(v)
            for v in (
                r.mu_db, r.m, r.n_hops, r.l_p, r.ber_analytic, r.ber_sim, r.sim_stderr,
                r.bits, r.errors, r.intf_exceedance, r.status,
            )
        )
    return buf.getvalue()


def write_csv(rows: Sequence[Row], path: Union[str, Path]) -> None:
    """Write rows with the fixed header; floats use shortest round-trip repr."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(rows))


def gnuplot_script(rows: Sequence[Row], csv_path: str) -> str:
    """A gnuplot script drawing analytic lines and simulated points per curve."""
    curves = []
    for r in rows:
        key = (r.m, r.n_hops, r.l_p)
        if key not in curves:
            curves.append(key)
    lines = [
        "set datafile separator ','",
        "set logscale y",
        "set xlabel 'I_T/N_0 (dB)'",
        "set ylabel 'BER'",
        "set key outside",
        "plot \\",
    ]
    parts = []
    for m, n, lp in curves:
        sel = f"(strcol(2) eq '{m}' && strcol(3) eq '{n}' && strcol(4) eq '{lp}')"
        title = f"{m}-QAM N={n} L_p={lp}"
        parts.append(
            f"  '{csv_path}' skip 1 using 1:({sel} ? $5 : 1/0) with lines title '{title} analytic'"
        )
        parts.append(
            f"  '{csv_path}' skip 1 using 1:({sel} ? $6 : 1/0) with points title '{title} sim'"
        )
    lines.append(", \\\n".join(parts))
    return "\n".join(lines) + "\n"
