"""Batch command line: sweeps in, CSV/JSON tables and SVG plots out.

Exit codes: 0 success, 2 unusable configuration, 3 validation or numerical
failure (including failed lemma checks), 4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bnd
from . import concentration as conc
from . import dilution as dil
from . import operators as ops
from . import plotting, rates
from .errors import EntspecError, ProtocolAborted, ResourceLimitError
from .sequences import (
    MixtureSpec,
    PurifiedSequence,
    StateSequence,
    iid_sequence,
    mixture_sequence,
    purify,
    sequence_from_config,
)
from .tables import Table, make_table, render, to_units

COMMANDS = ("rates", "concentrate", "dilute", "bounds", "separation", "lemmas")
MAX_N = 500

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_RESOURCE = 0, 2, 3, 4

DEFAULTS = {
    "sequence": "iid",
    "spectrum": [0.75, 0.25],
    "sigma": [0.9, 0.1],
    "omega": [0.5, 0.5],
    "t": 0.5,
    "n": [50, 100, 200],
    "gamma": None,
    "delta": 0.05,
    "epsilon": rates.DEFAULT_EPSILON,
    "grid_min": rates.DEFAULT_GRID[0],
    "grid_max": rates.DEFAULT_GRID[1],
    "grid_step": rates.DEFAULT_GRID[2],
    "seed": 0,
    "format": "csv",
    "quantity": "entropy",
    "mode": "achievable",
    "R": None,
    "sbar": None,
    "M": None,
    "rate": None,
    "bound": "relent",
    "trials": 1000,
    "dim": None,
    "units": "nats",
}

# never part of the provenance header, so outputs do not depend on file names
PATH_KEYS = ("output", "plot", "config")


class ConfigError(Exception):
    """The configuration cannot be turned into a run."""


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def n_list(self) -> list:
        return self.values["n"]

    @property
    def grid(self) -> rates.GammaGrid:
        return rates.GammaGrid(self["grid_min"], self["grid_max"], self["grid_step"])

    def provenance(self) -> dict:
        out = {k: v for k, v in self.values.items() if k not in PATH_KEYS}
        out["command"] = self.command
        out["version"] = __version__
        return out


# -- parsing ----------------------------------------------------------------------------


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="JSON file with option values; flags override it")
    a("--sequence", help="iid | mixture, or a JSON object describing the sequence")
    a("--spectrum", type=_float_list, help="single-copy spectrum for iid sequences")
    a("--sigma", type=_float_list, help="first mixture component spectrum")
    a("--omega", type=_float_list, help="second mixture component spectrum")
    a("--t", type=float, help="mixture weight of sigma")
    a("--n", type=_int_list, help="comma-separated copy counts")
    a("--gamma", type=float, help="threshold exponent in nats")
    a("--delta", type=float, help="rate slack in nats")
    a("--epsilon", type=float, help="bracket tolerance in (0, 0.5)")
    a("--grid-min", dest="grid_min", type=float)
    a("--grid-max", dest="grid_max", type=float)
    a("--grid-step", dest="grid_step", type=float)
    a("--seed", type=int)
    a("--format", choices=("csv", "json"))
    a("--units", choices=("nats", "bits"), help="display units for rate columns")
    a("--plot", help="write an SVG chart to this path")
    a("--output", "-o", help="write the table here instead of stdout")

    p = argparse.ArgumentParser(prog="entspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"entspec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("rates", parents=[common], help="spectral entropy-rate brackets per n")
    r.add_argument("--quantity", choices=("entropy", "conditional"))
    sub.add_parser("concentrate", parents=[common], help="threshold concentration sweep")
    d = sub.add_parser("dilute", parents=[common], help="dilution achievability or converse sweep")
    d.add_argument("--mode", choices=("achievable", "converse"))
    d.add_argument("--R", type=float, help="dilution rate for the converse bound")
    d.add_argument("--sbar", type=float, help="sup-entropy estimate; estimated from the sweep if absent")
    b = sub.add_parser("bounds", parents=[common], help="finite-n distillation fidelity bounds")
    b.add_argument("--bound", choices=("relent", "coherent"))
    b.add_argument("--M", type=int, help="target rank; alternatively --rate")
    b.add_argument("--rate", type=float, help="target rate, M = ceil(exp(n rate))")
    sub.add_parser("separation", parents=[common], help="mixture demo: distillable < cost")
    lm = sub.add_parser("lemmas", parents=[common], help="seeded random checks of the projection lemmas")
    lm.add_argument("--trials", type=int)
    lm.add_argument("--dim", type=int, help="fixed dimension (default cycles 2..6)")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the JSON file, then explicit flags."""
    values = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS) - {"command", "output", "plot"})
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if loaded.get("command", args.command) != args.command:
            raise ConfigError(f"config is for command {loaded['command']!r}, not {args.command!r}")
        values.update({k: v for k, v in loaded.items() if k != "command"})
    for key, v in vars(args).items():
        if key in ("command", "config") or v is None:
            continue
        values[key] = v
    if isinstance(values["sequence"], str) and values["sequence"].lstrip().startswith("{"):
        try:
            values["sequence"] = json.loads(values["sequence"])
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--sequence is not valid JSON: {exc}") from exc
    cfg = RunConfig(args.command, values)
    _check_config(cfg)
    return cfg


def _check_config(cfg: RunConfig) -> None:
    n = cfg["n"]
    if isinstance(n, int):
        cfg.values["n"] = n = [n]
    if not isinstance(n, list) or not n or not all(isinstance(x, int) for x in n):
        raise ConfigError("n must be a nonempty list of integers")
    if any(x < 1 for x in n):
        raise ConfigError("copy counts must be positive")
    if any(b <= a for a, b in zip(n, n[1:])):
        raise ConfigError("n must be strictly increasing")
    if max(n) > MAX_N:
        raise ResourceLimitError(f"n={max(n)} exceeds the cap n <= {MAX_N}")
    eps = cfg["epsilon"]
    if not isinstance(eps, (int, float)) or not 0 < eps < 0.5:
        raise ConfigError(f"epsilon must lie in (0, 0.5), got {eps!r}")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"unknown format {cfg['format']!r}")
    if cfg["units"] not in ("nats", "bits"):
        raise ConfigError(f"unknown units {cfg['units']!r}")


def build_sequence(cfg: RunConfig) -> StateSequence:
    seq = cfg["sequence"]
    if isinstance(seq, dict):
        return sequence_from_config(seq)
    if seq == "iid":
        return sequence_from_config({"kind": "iid", "spectrum": cfg["spectrum"]})
    if seq == "mixture":
        return sequence_from_config({"kind": "mixture", "sigma": cfg["sigma"], "omega": cfg["omega"], "t": cfg["t"]})
    raise ConfigError(f"unknown sequence {seq!r}; use iid, mixture or a JSON object")


# -- commands ---------------------------------------------------------------------------


BRACKET_COLUMNS = ("n", "gamma_lo", "gamma_hi", "epsilon", "lower_rate", "upper_rate",
                   "lo_out_of_range", "hi_out_of_range")
CURVE_COLUMNS = ("n", "gamma", "trace_value")
CONCENTRATION_COLUMNS = ("n", "gamma", "p_fail", "log_M", "rate", "rate_lower_bound", "majorization_ok",
                         "M", "floor_skipped", "aborted")
DILUTION_COLUMNS = ("n", "mode", "alpha_or_gamma", "rate", "fidelity_lb", "converse_term1", "converse_term2",
                    "converse_ub")
BOUND_COLUMNS = ("n", "gamma", "log_M", "term_projection", "term_rank", "total", "vacuous", "label")


def _rate_tables(est: rates.SpectralRateEstimate) -> list:
    brackets = [{"n": b.n, "gamma_lo": b.gamma_lo, "gamma_hi": b.gamma_hi, "epsilon": est.epsilon,
                 "lower_rate": est.lower_rate(b.n), "upper_rate": est.upper_rate(b.n),
                 "lo_out_of_range": b.lo_out_of_range, "hi_out_of_range": b.hi_out_of_range} for b in est.per_n]
    curve = [{"n": n, "gamma": g, "trace_value": v} for c in est.curves for n, g, v in c.rows()]
    return [make_table("brackets", BRACKET_COLUMNS, brackets), make_table("trace_curve", CURVE_COLUMNS, curve)]


def _curve_plot(est, title):
    return plotting.curve_series(est.curves), "gamma (nats)", "Tr[{Pi >= 0} Pi]", title


def cmd_rates(cfg: RunConfig):
    seq = build_sequence(cfg)
    if cfg["quantity"] == "conditional":
        if not isinstance(seq, PurifiedSequence) and not hasattr(seq, "bipartite_dims"):
            seq = purify(seq)
        est = rates.estimate_conditional_rates(seq, cfg.n_list, cfg.grid, cfg["epsilon"])
    elif cfg["quantity"] == "entropy":
        est = rates.estimate_entropy_rates(seq, cfg.n_list, cfg.grid, cfg["epsilon"])
    else:
        raise ConfigError(f"unknown quantity {cfg['quantity']!r}")
    return _rate_tables(est), _curve_plot(est, f"{est.quantity} rates")


def cmd_concentrate(cfg: RunConfig):
    if cfg["gamma"] is None:
        raise ConfigError("concentrate needs --gamma")
    seq = build_sequence(cfg)
    outs = conc.concentration_sweep(seq, cfg["gamma"], cfg.n_list, strict=False)
    rows = [dict(o.row(), M=o.M, floor_skipped=o.floor_skipped, aborted=o.aborted) for o in outs]
    series = [plotting.fidelity_series("p_fail", [o.n for o in outs], [o.p_fail for o in outs])]
    return [make_table("concentration", CONCENTRATION_COLUMNS, rows)], (series, "n", "failure probability",
                                                                         f"concentration at gamma={cfg['gamma']:g}")


def _dilution_rows(seq, cfg, mode, sbar=None, R=None, gamma=None):
    outs = dil.dilution_sweep(seq, cfg["delta"], cfg.n_list, mode, sbar_estimate=sbar, R=R, gamma=gamma)
    return outs, [o.row() for o in outs]


def cmd_dilute(cfg: RunConfig):
    seq = build_sequence(cfg)
    mode = cfg["mode"]
    if mode == "achievable":
        sbar = cfg["sbar"]
        if sbar is None:
            est = rates.estimate_entropy_rates(seq, cfg.n_list, cfg.grid, cfg["epsilon"])
            sbar = est.upper_rate(cfg.n_list[-1])
        outs, rows = _dilution_rows(seq, cfg, mode, sbar=sbar)
        series = [plotting.fidelity_series("fidelity_lb", [o.n for o in outs], [o.fidelity_lb for o in outs])]
    elif mode == "converse":
        if cfg["R"] is None:
            raise ConfigError("converse mode needs --R")
        outs, rows = _dilution_rows(seq, cfg, mode, R=cfg["R"], gamma=cfg["gamma"])
        series = [plotting.fidelity_series("converse_ub", [o.n for o in outs], [o.converse_ub for o in outs])]
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    return [make_table("dilution", DILUTION_COLUMNS, rows)], (series, "n", "fidelity", f"dilution ({mode})")


def cmd_bounds(cfg: RunConfig):
    gamma = 0.0 if cfg["gamma"] is None else cfg["gamma"]
    if (cfg["M"] is None) == (cfg["rate"] is None):
        raise ConfigError("bounds needs exactly one of --M or --rate")
    seq = build_sequence(cfg)
    if not isinstance(seq, PurifiedSequence):
        seq = purify(seq)
    rows = []
    for n in cfg.n_list:
        state = seq.state(n)
        ops.check_dense_dim(state.amplitudes.size)
        log_m = math.log(cfg["M"]) if cfg["M"] is not None else math.log(math.ceil(math.exp(n * cfg["rate"])))
        if cfg["bound"] == "relent":
            rep = bnd.best_relent_bound(state.density(), bnd.natural_candidates(state), gamma, n=n, log_M=log_m)
        elif cfg["bound"] == "coherent":
            rep = bnd.coherent_fidelity_bound(state.density(), state.dims, gamma, n=n, log_M=log_m,
                                              label="no_operation")
        else:
            raise ConfigError(f"unknown bound {cfg['bound']!r}")
        rows.append(rep.row())
    series = [plotting.fidelity_series(cfg["bound"], [r["n"] for r in rows], [r["total"] for r in rows])]
    return [make_table("bounds", BOUND_COLUMNS, rows)], (series, "n", "fidelity upper bound", f"{cfg['bound']} bound")


SUMMARY_COLUMNS = ("n", "S_lower", "S_upper", "lower_cell_lo", "lower_cell_hi", "upper_cell_lo", "upper_cell_hi",
                   "S_sigma", "S_omega", "gap", "C_DC")


def cmd_separation(cfg: RunConfig):
    spec = MixtureSpec(tuple(cfg["sigma"]), tuple(cfg["omega"]), float(cfg["t"]))
    seq = mixture_sequence(spec)
    delta = cfg["delta"]
    s_sigma = ops.von_neumann_entropy(np.asarray(spec.sigma))
    s_omega = ops.von_neumann_entropy(np.asarray(spec.omega))
    est = rates.estimate_entropy_rates(seq, cfg.n_list, cfg.grid, cfg["epsilon"])
    tables = _rate_tables(est)
    outs = conc.concentration_sweep(seq, s_sigma - delta, cfg.n_list, strict=False)
    tables.append(make_table("concentration", CONCENTRATION_COLUMNS,
                             [dict(o.row(), M=o.M, floor_skipped=o.floor_skipped, aborted=o.aborted) for o in outs]))
    _, drows = _dilution_rows(seq, cfg, "converse", R=s_omega - delta)
    tables.append(make_table("dilution", DILUTION_COLUMNS, drows))
    n = cfg.n_list[-1]
    lo_cell, hi_cell = est.lower_cell(n), est.upper_cell(n)
    gap = lo_cell[1] < hi_cell[0]
    summary = {"n": n, "S_lower": est.lower_rate(n), "S_upper": est.upper_rate(n),
               "lower_cell_lo": lo_cell[0], "lower_cell_hi": lo_cell[1],
               "upper_cell_lo": hi_cell[0], "upper_cell_hi": hi_cell[1],
               "S_sigma": s_sigma, "S_omega": s_omega, "gap": gap,
               "C_DC": bnd.dense_coding_capacity(max(est.lower_rate(n), 0.0), len(spec.sigma))}
    tables.append(make_table("summary", SUMMARY_COLUMNS, [summary]))
    return tables, _curve_plot(est, "mixture entropy rates")


def cmd_lemmas(cfg: RunConfig):
    dims = cfg["dim"] if cfg["dim"] is not None else (2, 3, 4, 5, 6)
    if cfg["trials"] < 1:
        raise ConfigError("trials must be positive")
    rep = rates.run_lemma_suite(cfg["trials"], dims, cfg["seed"])
    rows = [{"kind": k, "checks": v["checks"], "failures": v["failures"]} for k, v in sorted(rep.per_kind.items())]
    rows.append({"kind": "all", "checks": rep.checks, "failures": rep.failures, "worst_margin": rep.worst_margin})
    table = make_table("lemmas", ("kind", "checks", "failures", "worst_margin"), rows, sort=False)
    return [table], None, (EXIT_OK if rep.passed else EXIT_VALIDATION)


HANDLERS = {"rates": cmd_rates, "concentrate": cmd_concentrate, "dilute": cmd_dilute, "bounds": cmd_bounds,
            "separation": cmd_separation, "lemmas": cmd_lemmas}


def run(cfg: RunConfig) -> int:
    """Execute one command and write its artifacts; returns the exit status."""
    result = HANDLERS[cfg.command](cfg)
    tables, plot = result[0], result[1]
    status = result[2] if len(result) > 2 else EXIT_OK
    tables = [to_units(t, cfg["units"]) for t in tables]
    text = render(tables, cfg.provenance(), cfg["format"])
    if cfg.get("output"):
        Path(cfg["output"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if cfg.get("plot"):
        if plot is None:
            raise ConfigError(f"command {cfg.command!r} has no plot")
        series, xlabel, ylabel, title = plot
        plotting.emit_plot(series, cfg["plot"], xlabel, ylabel, title)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run(resolve_config(args))
    except ConfigError as exc:
        print(f"entspec: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"entspec: resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ProtocolAborted as exc:
        print(f"entspec: protocol aborted: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (EntspecError, ValueError) as exc:
        print(f"entspec: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"entspec: I/O error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
