"""Experiment sweeps, CSV emission and plot-script generation."""

from __future__ import annotations

import csv
import io
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import outage
from .baselines import (BaselineSpec, antenna_selection_baseline, exhaustive_oracle,
                        fixed_pa_baseline)
from .sca import OptimizationResult, SCAConfig, optimize
from .scenario import (SCENARIO_KEYS, ConfigError, SystemParams, dbm_to_watts,
                       default_params, params_from_mapping)

CSV_COLUMNS = (
    "scheme", "surrogate_mode", "T", "M", "rmin_bps_hz", "pt_dbm", "seed",
    "outage_closed", "outage_chernoff", "chernoff_s", "outage_mc", "mc_stderr",
    "rate_sum_bps_hz", "feasible", "sca_iters", "selected_positions", "wall_ms",
)
SCHEMES = ("proposed", "fixed_pa", "antenna_selection", "oracle")
HARNESS_KEYS = ("scheme", "surrogate_mode", "mc_samples", "seeds", "power_sweep_dbm",
                "rmin_list", "t_list", "rho0", "sca_eps", "output_csv", "baseline_rcs")

# 0 to 40 dBm in 2 dB steps brackets the outage transition on the defaults
DEFAULT_POWERS = tuple(float(x) for x in range(0, 41, 2))


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.9g" % float(x)


def parse_list(text: str, conv=float) -> list:
    """Comma-separated values; ``a:b:step`` expands to an inclusive range."""
    text = text.strip()
    if not text:
        return []
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            bits = part.split(":")
            if len(bits) != 3:
                raise ValueError(f"range must be start:stop:step, got {part!r}")
            lo, hi, step = (float(b) for b in bits)
            if step <= 0:
                raise ValueError("range step must be positive")
            n = int(np.floor((hi - lo) / step + 1e-9)) + 1
            out.extend(conv(round(lo + i * step, 12)) for i in range(max(n, 0)))
        else:
            out.append(conv(part))
    return out


def _int(text) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


@dataclass
class ExperimentSpec:
    params: SystemParams = field(default_factory=default_params)
    schemes: list = field(default_factory=lambda: ["proposed"])
    surrogate_mode: str = "corrected"
    power_sweep_dbm: list = field(default_factory=lambda: list(DEFAULT_POWERS))
    rmin_list: list = field(default_factory=lambda: [0.5])
    t_list: list = field(default_factory=lambda: [4])
    mc_samples: int = 0
    seeds: list = field(default_factory=lambda: [0])
    output_path: str | None = None
    rho0: float = 1e-2
    sca_eps: float = 1e-4
    baseline_rcs: str = "correlated"

    def check(self):
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}", "scheme")
        if self.surrogate_mode not in ("corrected", "paper"):
            raise ConfigError(f"unknown surrogate_mode {self.surrogate_mode!r}",
                              "surrogate_mode")
        if self.mc_samples < 0:
            raise ConfigError("mc_samples must be >= 0", "mc_samples")
        if self.baseline_rcs not in ("iid", "correlated"):
            raise ConfigError(f"unknown baseline_rcs {self.baseline_rcs!r}", "baseline_rcs")
        for T in self.t_list:
            if not 1 <= T <= self.params.num_positions:
                raise ConfigError(f"T={T} must lie in [1, num_positions]", "t_list")
        try:
            self.sca_config()
        except ValueError as exc:
            key = "rho0" if "penalty" in str(exc) else "sca_eps"
            raise ConfigError(str(exc), key) from exc
        return self

    def sca_config(self) -> SCAConfig:
        return SCAConfig(surrogate_mode=self.surrogate_mode, penalty_init=self.rho0,
                         sca_tolerance=self.sca_eps)

    def tuples(self):
        """(scheme, T, R_min, power, seed) in the fixed output order."""
        return list(itertools.product(self.schemes, self.t_list, self.rmin_list,
                                      self.power_sweep_dbm, self.seeds))


_SPEC_PARSERS = {
    "scheme": ("schemes", lambda v: parse_list(v, str)),
    "surrogate_mode": ("surrogate_mode", str),
    "mc_samples": ("mc_samples", _int),
    "seeds": ("seeds", lambda v: parse_list(v, _int)),
    "power_sweep_dbm": ("power_sweep_dbm", parse_list),
    "rmin_list": ("rmin_list", parse_list),
    "t_list": ("t_list", lambda v: parse_list(v, _int)),
    "rho0": ("rho0", float),
    "sca_eps": ("sca_eps", float),
    "output_csv": ("output_path", lambda v: v or None),
    "baseline_rcs": ("baseline_rcs", str),
}


def spec_from_mapping(values: dict[str, str]) -> ExperimentSpec:
    unknown = [k for k in values if k not in SCENARIO_KEYS and k not in _SPEC_PARSERS]
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}", unknown[0])
    params = params_from_mapping({k: v for k, v in values.items() if k in SCENARIO_KEYS})
    spec = ExperimentSpec(params=params)
    # single-point scenario keys seed the sweep lists
    if "pt_dbm" in values:
        spec.power_sweep_dbm = [float(values["pt_dbm"])]
    if "rmin_bps_hz" in values:
        spec.rmin_list = [params.min_rate]
    if "num_slots" in values:
        spec.t_list = [params.num_slots]
    for key, raw in values.items():
        if key not in _SPEC_PARSERS:
            continue
        attr, conv = _SPEC_PARSERS[key]
        try:
            setattr(spec, attr, conv(raw))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})", key) from exc
    spec.schemes = [s.strip() for s in spec.schemes]
    return spec.check()


def run_scheme(scheme: str, p: SystemParams, spec: ExperimentSpec, seed: int) -> OptimizationResult:
    if scheme == "proposed":
        return optimize(p, spec.sca_config(), seed=seed)
    if scheme == "fixed_pa":
        return fixed_pa_baseline(p, BaselineSpec("fixed_pa", spec.baseline_rcs))
    if scheme == "antenna_selection":
        return antenna_selection_baseline(
            p, spec.sca_config(), BaselineSpec("antenna_selection", spec.baseline_rcs), seed=seed)
    if scheme == "oracle":
        return exhaustive_oracle(p)
    raise ConfigError(f"unknown scheme {scheme!r}", "scheme")


def run_tuple(spec: ExperimentSpec, tup, timing: bool = False) -> dict:
    scheme, T, rmin, power, seed = tup
    p = spec.params.replace(num_slots=T, min_rate=rmin, transmit_power=dbm_to_watts(power))
    t0 = time.perf_counter()
    res = run_scheme(scheme, p, spec, seed)
    wall = (time.perf_counter() - t0) * 1e3
    psi = res.diagnostics["slot_gains"]
    rep = outage.outage_report(psi, p, res.rcs_model, spec.mc_samples, seed)
    return {
        "scheme": scheme,
        "surrogate_mode": spec.surrogate_mode,
        "T": T,
        "M": p.num_positions,
        "rmin_bps_hz": float(rmin),
        "pt_dbm": float(power),
        "seed": seed,
        "outage_closed": rep.exact_cdf,
        "outage_chernoff": rep.chernoff_bound,
        "chernoff_s": rep.chernoff_s,
        "outage_mc": rep.mc_estimate,
        "mc_stderr": rep.mc_stderr,
        "rate_sum_bps_hz": res.achieved_rate,
        "feasible": bool(res.feasible),
        "sca_iters": int(res.iterations),
        "selected_positions": ";".join(str(m + 1) for m in res.selected_positions),
        "wall_ms": wall if timing else None,
    }


def run_rows(spec: ExperimentSpec, jobs: int = 1, timing: bool = False) -> list[dict]:
    """All sweep rows in tuple order, whatever the completion order."""
    tuples = spec.tuples()
    if jobs > 1 and len(tuples) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_tuple, [spec] * len(tuples), tuples,
                                 [timing] * len(tuples)))
    return [run_tuple(spec, t, timing) for t in tuples]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows, path: str | Path | None) -> str:
    text = rows_to_csv(rows)
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# plot script

PLOT_COLUMNS = ("scheme", "T", "pt_dbm", "outage_closed")


def emit_plot_script(csv_path: str | Path) -> str:
    """Text of a standalone matplotlib script plotting outage vs power.

    One series per (scheme, T), plus R_min when the CSV holds several;
    seeds are averaged.  The data is embedded, so the script runs without
    this package.
    """
    try:
        text = Path(csv_path).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read {csv_path}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    cols = reader.fieldnames or []
    missing = [c for c in PLOT_COLUMNS if c not in cols]
    if missing:
        raise ValueError(f"CSV is missing columns: {', '.join(missing)}")
    rows = list(reader)
    if not rows:
        raise ValueError("CSV has no data rows")
    multi_rmin = "rmin_bps_hz" in cols and len({r["rmin_bps_hz"] for r in rows}) > 1

    series: dict[str, dict[float, list[float]]] = {}
    for r in rows:
        label = f"{r['scheme']}, T={r['T']}"
        if multi_rmin:
            label += f", Rmin={r['rmin_bps_hz']}"
        series.setdefault(label, {}).setdefault(float(r["pt_dbm"]), []).append(
            float(r["outage_closed"]))

    lines = [
        "# outage probability versus transmit power",
        "import matplotlib.pyplot as plt",
        "",
        "series = {",
    ]
    for label, pts in series.items():
        xs = sorted(pts)
        ys = [float(np.mean(pts[x])) for x in xs]
        lines.append(f"    {label!r}: ({[float(x) for x in xs]!r}, {ys!r}),")
    lines += [
        "}",
        "",
        "fig, ax = plt.subplots()",
        "for label, (x, y) in series.items():",
        "    ax.plot(x, y, marker='o', label=label)",
        "ax.set_yscale('log')",
        "ax.set_xlabel('transmit power [dBm]')",
        "ax.set_ylabel('outage probability')",
        "ax.grid(True, which='both', alpha=0.3)",
        "ax.legend()",
        "plt.show()",
        "",
    ]
    return "\n".join(lines)
