"""Execute a validated scenario and turn the result into a table."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from cyclocap import __version__
from cyclocap.asynccap import (
    async_capacity,
    capacity_sequence,
    sweep_offset,
    sweep_power,
    sweep_ratio,
)
from cyclocap.cli.output import Table, write_csv, write_svg
from cyclocap.cli.scenario import Scenario, format_eps
from cyclocap.infospec import interchange_check
from cyclocap.waterfill import LN2

__all__ = ["capacity_unit", "run_scenario", "run_point", "run_pulse", "run_infospec", "emit"]

log = logging.getLogger(__name__)


def capacity_unit(log_base):
    return "bits/use" if str(log_base) == "2" else "nats/use"


def _convert(bits, log_base):
    bits = np.asarray(bits, dtype=float)
    return (bits if str(log_base) == "2" else bits * LN2).tolist()


def _meta(scenario: Scenario, log_base, seed=None, **extra):
    meta = {
        "tool": f"cyclocap {__version__}",
        "scenario": scenario.name,
        "scenario_sha256": scenario.digest(seed),
        "log_base": str(log_base),
    }
    if seed is not None:
        meta["seed"] = seed
    meta.update(extra)
    return meta


def run_point(scenario: Scenario, log_base="2", workers=None, verbose=False) -> Table:
    """One capacity per series at the scenario's own td, eps and power."""
    values, methods = [], []
    for s in scenario.series:
        c = async_capacity(s.profile, s.td, s.eps, s.power, workers=workers)
        values.append(c.capacity(log_base))
        methods.append(c.method)
        if verbose:
            print(f"{s.label}: td={s.td} eps={format_eps(s.eps)} P={s.power:g} "
                  f"C={c.capacity(log_base):.6g} {capacity_unit(log_base)} ({c.method})")
    powers = {s.power for s in scenario.series}
    axis = [scenario.series[0].power] if len(powers) == 1 else list(range(len(scenario.series)))
    unit = capacity_unit(log_base)
    if len(powers) == 1:
        return Table(
            ["P"] + [s.label for s in scenario.series],
            ["linear"] + [unit] * len(values),
            [axis] + [[v] for v in values],
            _meta(scenario, log_base, methods=";".join(methods)),
        )
    return Table(
        ["series", "P", "capacity"],
        ["index", "linear", unit],
        [axis, [s.power for s in scenario.series], values],
        _meta(scenario, log_base, labels=";".join(s.label for s in scenario.series)),
    )


def _sweep_n(scenario, log_base, workers, verbose):
    sw = scenario.sweep
    cols, units, data, extra = [], [], [], {}
    unit = capacity_unit(log_base)
    axis = None
    for s in scenario.series:
        count = len(range(sw["n_min"], sw["n_max"] + 1, sw["step"]))
        seq = capacity_sequence(
            s.profile, s.td, s.eps, s.power, sw["n_min"], sw["n_max"], step=sw["step"],
            tail_window=min(sw["tail_window"], count), log_base=log_base, workers=workers,
        )
        if axis is None:
            axis = seq.ns.tolist()
        cols.append(s.label)
        units.append(unit)
        data.append(seq.capacities(log_base).tolist())
        est = seq.liminf
        extra[f"liminf[{s.label}]"] = (
            f"{est.value:.17g} window={est.tail_window} spread={est.tail_spread:.3g} "
            f"converged={str(est.converged).lower()}"
        )
        for w in seq.metadata["warnings"]:
            extra[f"warning[{s.label}]"] = w
        if verbose:
            for n, c in zip(seq.ns, data[-1]):
                print(f"{s.label}: n={n} C_n={c:.6g} {unit}")
    return Table(["n"] + cols, ["index"] + units, [axis] + data,
                 _meta(scenario, log_base, **extra))


def _sweep_ratio(scenario, log_base, workers, verbose):
    sw = scenario.sweep
    cols, units, data = [], [], []
    unit = capacity_unit(log_base)
    notes = None
    for s in scenario.series:
        res = sweep_ratio(s.profile, sw["grid"], s.power, sw["max_denominator"], workers=workers)
        cols.append(s.label)
        units.append(unit)
        data.append(res.in_base(log_base).tolist())
        notes = res.annotations
        if verbose:
            for r, c, td, num, den in zip(res.axis, data[-1], notes["td"], notes["eps_num"],
                                          notes["eps_den"]):
                print(f"{s.label}: Tc/Ts={r:.6g} ({td}+{num}/{den}) C={c:.6g} {unit}")
    for key in ("td", "eps_num", "eps_den", "period_len"):
        cols.append(key)
        units.append("count")
        data.append([int(v) for v in notes[key]])
    return Table(["Tc/Ts"] + cols, ["ratio"] + units, [list(map(float, sw["grid"]))] + data,
                 _meta(scenario, log_base, max_denominator=sw["max_denominator"]))


def _sweep_power(scenario, log_base, workers, verbose):
    sw = scenario.sweep
    cols, units, data, extra = [], [], [], {}
    unit = capacity_unit(log_base)
    for s in scenario.series:
        (res,) = sweep_power(s.profile, s.td, [s.eps], sw["grid"], n_max=sw.get("n_max_liminf"),
                             tail_window=sw["tail_window"], workers=workers)
        cols.append(s.label)
        units.append(unit)
        data.append(res.in_base(log_base).tolist())
        if not all(res.annotations["converged"]):
            extra[f"warning[{s.label}]"] = "liminf tail spread above threshold"
        if verbose:
            for p, c, m in zip(res.axis, data[-1], res.annotations["method"]):
                print(f"{s.label}: P={p:.6g} C={c:.6g} {unit} ({m})")
    return Table(["P"] + cols, ["linear"] + units, [list(map(float, sw["grid"]))] + data,
                 _meta(scenario, log_base, **extra))


def _sweep_offset(scenario, log_base, workers, verbose):
    sw = scenario.sweep
    cols, units, data = [], [], []
    unit = capacity_unit(log_base)
    for s in scenario.series:
        res = sweep_offset(s.profile, s.td, s.eps, sw["grid"], s.power,
                           n_max=sw.get("n_max_liminf"), tail_window=sw["tail_window"],
                           workers=workers)
        cols.append(s.label)
        units.append(unit)
        data.append(res.in_base(log_base).tolist())
        if verbose:
            for phi, c in zip(res.axis, data[-1]):
                print(f"{s.label}: phi={phi:.6g} C={c:.6g} {unit}")
    return Table(["phi"] + cols, ["period fraction"] + units,
                 [list(map(float, sw["grid"]))] + data, _meta(scenario, log_base))


_SWEEPS = {"n": _sweep_n, "ratio": _sweep_ratio, "power": _sweep_power, "offset": _sweep_offset}


def run_scenario(scenario: Scenario, log_base="2", workers=None, verbose=False) -> Table:
    """Run the scenario's sweep, or a single point when it has none."""
    if scenario.sweep is None:
        return run_point(scenario, log_base, workers, verbose)
    return _SWEEPS[scenario.kind](scenario, log_base, workers, verbose)


def run_pulse(scenario: Scenario, points=1001) -> Table:
    """Tabulate each series' variance over one period of the profile."""
    t = np.linspace(0.0, 1.0, int(points)).tolist()
    cols, units, data = [], [], []
    for s in scenario.series:
        cols.append(s.label)
        units.append("variance")
        data.append(np.asarray(s.profile.level(np.asarray(t)), dtype=float).tolist())
    return Table(["t/Tc"] + cols, ["period fraction"] + units, [t] + data,
                 _meta(scenario, "2"))


def run_infospec(scenario: Scenario, seed=None, workers=None, verbose=False) -> Table:
    """Per-n p-liminf estimates of the information density rate (nats)."""
    spec = dict(scenario.infospec or {})
    if seed is not None:
        spec["seed"] = seed
    spec.setdefault("seed", 0)
    s = scenario.series[0]
    n_list = spec.get("n_list") or [10, 50, 100, 200]
    rep = interchange_check(
        s.profile, s.td, s.eps, s.power, n_list, spec.get("k_list", [100, 1000, 10000]),
        seed=spec["seed"], n_samples=spec.get("n_samples", 1000),
        delta=spec.get("delta", 0.05), alpha_resolution=spec.get("alpha_resolution", 1e-3),
        workers=workers,
    )
    rows = rep.per_n + [dict(rep.proxy, n=rep.proxy["order"], eps_n=rep.proxy["eps"])]
    if verbose:
        for r in rows:
            print(f"n={r['n']} eps_n={r['eps_n']} plim={r['estimate']:.6g} nats "
                  f"C={r['capacity_nats']:.6g} flagged={r['flagged']}")
    return Table(
        ["n", "eps_n", "period_len", "p_liminf", "capacity", "flagged"],
        ["index", "ratio", "count", "nats/use", "nats/use", "flag"],
        [[int(r["n"]) for r in rows], [str(r["eps_n"]) for r in rows],
         [int(r["period_len"]) for r in rows], [float(r["estimate"]) for r in rows],
         [float(r["capacity_nats"]) for r in rows], [bool(r["flagged"]) for r in rows]],
        _meta(scenario, "e", spec["seed"], holds=str(rep.holds).lower(),
              asynccap_liminf=f"{rep.asynccap_liminf_nats:.17g}"),
    )


def emit(table: Table, out_dir, name, fmt="csv", title=""):
    """Write ``name.csv`` and, for ``csv+svg``, ``name.svg``; return the paths."""
    out_dir = Path(out_dir)
    paths = [write_csv(table, out_dir / f"{name}.csv")]
    if fmt == "csv+svg":
        paths.append(write_svg(table, out_dir / f"{name}.svg", title=title or name))
    return paths
