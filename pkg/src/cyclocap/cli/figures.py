"""Pinned figure scenarios and their reference values.

Each figure id maps to a scenario tree and a list of :class:`FigureTarget`.
Quoted reference values are compared in both log bases; the report names
the base (if any) in which every quoted value is matched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cyclocap.asynccap import async_capacity, rationalize_ratio
from cyclocap.cli.runner import emit, run_scenario
from cyclocap.cli.scenario import scenario_from_dict
from cyclocap.profile import reference_profile
from cyclocap.waterfill import LN2

__all__ = [
    "FIGURE_IDS",
    "FigureTarget",
    "TargetOutcome",
    "FigureReport",
    "figure_scenario",
    "figure_targets",
    "reproduce",
    "matching_bases",
]

FIGURE_IDS = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8")
BASES = ("2", "e")

_PROFILE = {"base": 0.2, "amplitude": 4.8, "period_tc_seconds": 5.0e-6, "rise": 0.01}
_DUTIES = (0.01, 0.47, 0.75, 0.95)


def _pct(d):
    return f"DC={round(100 * d)}%"


def _n_figure(name, phi):
    return {
        "schema_version": 1,
        "name": name,
        "profile": {**_PROFILE, "offset_phi": phi, "duty": 0.47},
        "sampling": {"td": 2, "eps": "pi/7"},
        "power": 1.0,
        "sweep": {"kind": "n", "n_min": 1, "n_max": 500, "tail_window": 250},
        "series": [{"label": _pct(d), "duty": d} for d in _DUTIES],
        "output": {"name": name, "format": "csv+svg"},
    }


def _ratio_figure(name, phi):
    return {
        "schema_version": 1,
        "name": name,
        "profile": {**_PROFILE, "offset_phi": phi},
        "sampling": {"td": 2, "eps": 0},
        "power": 1.0,
        "sweep": {"kind": "ratio", "grid": {"start": 2.0, "stop": 4.0, "num": 2001},
                  "max_denominator": 10**4},
        "series": [{"label": "DC=47%", "duty": 0.47}, {"label": "DC=95%", "duty": 0.95}],
        "output": {"name": name, "format": "csv+svg"},
    }


def _power_figure(name, phi):
    return {
        "schema_version": 1,
        "name": name,
        "profile": {**_PROFILE, "offset_phi": phi, "duty": 0.47},
        "sampling": {"td": 2, "eps": 0},
        "sweep": {"kind": "power", "grid": {"start": 1.0, "stop": 100.0, "num": 100},
                  "eps_list": ["0", "pi/1000", "0.2"]},
        "output": {"name": name, "format": "csv+svg"},
    }


_SCENARIOS = {
    "fig3": lambda: _n_figure("fig3", 0.0),
    "fig4": lambda: _n_figure("fig4", 0.25),
    "fig5": lambda: _ratio_figure("fig5", 0.0),
    "fig6": lambda: _ratio_figure("fig6", 0.25),
    "fig7": lambda: _power_figure("fig7", 0.0),
    "fig8": lambda: _power_figure("fig8", 0.25),
}


@dataclass(frozen=True)
class FigureTarget:
    """One reference value or property of a figure.

    ``provenance`` is ``quoted`` for externally quoted reference values
    (compared in both log bases), ``derived`` for properties of the model
    and ``relative`` for base-independent ratios.  ``measure`` maps the
    figure table (bits) to a value in bits.
    """

    figure_id: str
    name: str
    measure: object = field(repr=False)
    expected: float = math.nan
    tolerance: float = math.nan
    provenance: str = "quoted"
    comparison: str = "abs"  # abs | lt | gt | between
    upper: float = math.nan


@dataclass(frozen=True)
class TargetOutcome:
    target: FigureTarget
    value_bits: float
    residual: dict
    passed: dict

    @property
    def quoted(self):
        return self.target.provenance == "quoted"


@dataclass
class FigureReport:
    figure_id: str
    outcomes: list
    matching: list
    artifacts: list

    def passed(self, log_base):
        return all(o.passed[str(log_base)] for o in self.outcomes)

    def render(self):
        lines = [f"figure {self.figure_id}"]
        if any(o.quoted for o in self.outcomes):
            lines.append(f"matching log base: {_base_names(self.matching)}")
        else:
            lines.append("matching log base: n/a (no quoted absolute values)")
        for o in self.outcomes:
            t = o.target
            if t.provenance == "relative":
                vals = f"value={o.value_bits:.6g}"
            else:
                vals = f"value={o.value_bits:.6g} bits / {o.value_bits * LN2:.6g} nats"
            if t.comparison == "abs":
                verdict = "; ".join(
                    f"{_base_name(b)}: residual {o.residual[b]:+.4f} {'ok' if o.passed[b] else 'FAIL'}"
                    for b in BASES
                )
                lines.append(f"  [{t.provenance}] {t.name}: expected {t.expected:g} +/- "
                             f"{t.tolerance:g}; {vals}; {verdict}")
            else:
                verdict = "; ".join(
                    f"{_base_name(b)}: {'ok' if o.passed[b] else 'FAIL'}" for b in BASES
                )
                lines.append(f"  [{t.provenance}] {t.name}: {_describe(t)}; {vals}; {verdict}")
        return "\n".join(lines) + "\n"


def _base_name(b):
    return "bits" if b == "2" else "nats"


def _base_names(bases):
    return " and ".join(_base_name(b) for b in bases) if bases else "none"


def _describe(t):
    if t.comparison == "lt":
        return f"required < {t.expected:g}"
    if t.comparison == "gt":
        return f"required > {t.expected:g}"
    return f"required in [{t.expected:g}, {t.upper:g}]"


def figure_scenario(figure_id):
    if figure_id not in _SCENARIOS:
        raise KeyError(f"unknown figure {figure_id!r}; choose from {FIGURE_IDS}")
    return scenario_from_dict(_SCENARIOS[figure_id]())


def _range_over(table, label, lo, hi):
    n = np.asarray(table.column("n"))
    c = np.asarray(table.column(label), dtype=float)
    sel = c[(n >= lo) & (n <= hi)]
    return float(sel.min()), float(sel.max())


def _tail_spread(table, label, n_from=251):
    n = np.asarray(table.column("n"))
    c = np.asarray(table.column(label), dtype=float)[n >= n_from]
    return float(c.max() - c.min())


def _spread_early(table, label):
    lo, hi = _range_over(table, label, 5, 15)
    return hi - lo


def _at_ratio(table, label, ratio):
    x = np.asarray(table.column("Tc/Ts"), dtype=float)
    return float(np.asarray(table.column(label), dtype=float)[int(np.argmin(np.abs(x - ratio)))])


def plateau_mask(table, min_denominator=20):
    den = np.asarray(table.column("eps_den"))
    return den >= min_denominator


def _plateau(table, label, stat):
    c = np.asarray(table.column(label), dtype=float)[plateau_mask(table)]
    return float(np.mean(c) if stat == "mean" else np.std(c))


def _at_power(table, label, power):
    x = np.asarray(table.column("P"), dtype=float)
    return float(np.asarray(table.column(label), dtype=float)[int(np.argmin(np.abs(x - power)))])


def _drop(table, power):
    c0 = _at_power(table, "eps=0", power)
    c1 = _at_power(table, "eps=pi/1000", power)
    return (c0 - c1) / c0


def _offset_gap(ratio, duty=0.47):
    td, eps = rationalize_ratio(ratio)
    c0 = async_capacity(reference_profile(duty, 0.0), td, eps, 1.0).capacity_bits
    c1 = async_capacity(reference_profile(duty, 0.25), td, eps, 1.0).capacity_bits
    return abs(c0 - c1)


def _async_agreement(table, other):
    # Same curve at the other offset, recomputed independently.
    prof = reference_profile(0.47, other)
    worst = 0.0
    for p in (1.0, 10.0, 100.0):
        mine = _at_power(table, "eps=pi/1000", p)
        theirs = async_capacity(prof, 2, math.pi / 1000, p).capacity_bits
        worst = max(worst, abs(mine - theirs))
    return worst


def _range_targets(fid, lo, hi):
    return [
        FigureTarget(fid, "DC=95% min C_n over n in [5,15]",
                     lambda t: _range_over(t, "DC=95%", 5, 15)[0], lo, 0.05),
        FigureTarget(fid, "DC=95% max C_n over n in [5,15]",
                     lambda t: _range_over(t, "DC=95%", 5, 15)[1], hi, 0.05),
        FigureTarget(fid, "DC=95% spread over n in [251,500] / spread over n in [5,15]",
                     lambda t: _tail_spread(t, "DC=95%") / _spread_early(t, "DC=95%"), 1.0,
                     provenance="relative", comparison="lt"),
    ]


def figure_targets(figure_id):
    """Reference values attached to ``figure_id``."""
    if figure_id == "fig3":
        return _range_targets("fig3", 0.1407, 0.2615)
    if figure_id == "fig4":
        return _range_targets("fig4", 0.0946, 0.1929)
    if figure_id in ("fig5", "fig6"):
        at3 = 0.7778 if figure_id == "fig5" else 0.4708
        out = [
            FigureTarget(figure_id, "DC=47% capacity at Tc/Ts=3",
                         lambda t: _at_ratio(t, "DC=47%", 3.0), at3, 0.05),
            FigureTarget(figure_id, "DC=47% plateau mean (denominator >= 20)",
                         lambda t: _plateau(t, "DC=47%", "mean"), 0.64, 0.05),
            FigureTarget(figure_id, "DC=47% plateau std",
                         lambda t: _plateau(t, "DC=47%", "std"), 0.02, provenance="derived",
                         comparison="lt"),
            FigureTarget(figure_id, "DC=47% offset gap at Tc/Ts=3",
                         lambda t: _offset_gap(3.0), 0.2, provenance="derived", comparison="gt"),
        ]
        if figure_id == "fig5":
            out += [
                FigureTarget("fig5", "DC=47% capacity at Tc/Ts=2.47",
                             lambda t: _at_ratio(t, "DC=47%", 2.47), 0.647, 0.05),
                FigureTarget("fig5", "DC=47% capacity at Tc/Ts=2.5",
                             lambda t: _at_ratio(t, "DC=47%", 2.5), 0.725, 0.05),
                FigureTarget("fig5", "DC=95% capacity at Tc/Ts=2.47",
                             lambda t: _at_ratio(t, "DC=95%", 2.47), 0.123, 0.05),
                FigureTarget("fig5", "DC=95% capacity at Tc/Ts=2.5",
                             lambda t: _at_ratio(t, "DC=95%", 2.5), 0.326, 0.05),
            ]
        return out
    if figure_id == "fig7":
        return [
            FigureTarget("fig7", "relative drop eps 0 -> pi/1000 at P=10",
                         lambda t: _drop(t, 10.0), 0.2, provenance="relative",
                         comparison="between", upper=0.4),
            FigureTarget("fig7", "pi/1000 curve vs other offset, max gap over P in {1,10,100}",
                         lambda t: _async_agreement(t, 0.25), 0.02, provenance="derived",
                         comparison="lt"),
        ]
    if figure_id == "fig8":
        return [
            FigureTarget("fig8", "relative change eps 0 -> pi/1000 at P=10 (increase)",
                         lambda t: -_drop(t, 10.0), 0.0, provenance="relative", comparison="gt"),
            FigureTarget("fig8", "pi/1000 curve vs other offset, max gap over P in {1,10,100}",
                         lambda t: _async_agreement(t, 0.0), 0.02, provenance="derived",
                         comparison="lt"),
        ]
    raise KeyError(f"unknown figure {figure_id!r}; choose from {FIGURE_IDS}")


def evaluate(target: FigureTarget, table_bits) -> TargetOutcome:
    """Compare in both bases; relative checks are base-independent."""
    v = float(target.measure(table_bits))
    residual, passed = {}, {}
    for b in BASES:
        scale = 1.0 if b == "2" or target.provenance == "relative" else LN2
        if target.comparison == "abs":
            residual[b] = v * scale - target.expected
            passed[b] = abs(residual[b]) <= target.tolerance
        else:
            residual[b] = v * scale
            passed[b] = _compare(target, v * scale)
    return TargetOutcome(target, v, residual, passed)


def _compare(target, v):
    if target.comparison == "lt":
        return v < target.expected
    if target.comparison == "gt":
        return v > target.expected
    return target.expected <= v <= target.upper


def matching_bases(outcomes):
    """Bases in which every quoted value is within tolerance."""
    quoted = [o for o in outcomes if o.quoted]
    return [b for b in BASES if quoted and all(o.passed[b] for o in quoted)]


def reproduce(figure_id, out_dir, workers=None, fmt="csv+svg") -> FigureReport:
    """Run the pinned scenario, write its CSV/SVG and a text report."""
    scenario = figure_scenario(figure_id)
    table = run_scenario(scenario, log_base="2", workers=workers)
    artifacts = emit(table, out_dir, figure_id, fmt, title=figure_id)
    outcomes = [evaluate(t, table) for t in figure_targets(figure_id)]
    report = FigureReport(figure_id, outcomes, matching_bases(outcomes), artifacts)
    path = Path(out_dir) / f"{figure_id}_report.txt"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report.render())
    report.artifacts.append(path)
    return report
