"""parkwalk command line.

Every run prints (or writes) one JSON document holding the resolved run
configuration under "config" and the answer under "result".  Feeding that
document back through ``--config`` repeats the run and reproduces the output
byte for byte.  Exact inputs (``--p 1/2``) give exact rational answers,
decimal inputs (``--p 0.5``) give floats; the chosen mode is echoed.

Exit status: 0 on success, 1 on invalid input, 2 when a check fails.

Heatmap CSV: header ``p,y,count,total``, one row per grid cell, then one
trailing ``# config=...`` comment line.  The optional PGM is binary 8-bit
grayscale, one column per p, rows ordered with the largest y first.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analytics as an
from . import catalan as cat
from . import experiments as ex
from .core import (
    DomainError, PreferenceList, ValidationError, classical_park, classify, parse_prefs,
)
from .engine import Boundary, WalkParameters, batch_simulate
from .samplers import Family, SamplerConfig, sample

INLINE_CAP = 10**4
SEED_ENV = "PARKWALK_SEED"


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, payload):
        super().__init__("check failed")
        self.payload = payload


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# -- input helpers ------------------------------------------------------------------


def _alpha(cfg) -> PreferenceList:
    if cfg.get("alpha_file"):
        text = Path(cfg["alpha_file"]).read_text()
        return parse_prefs(text)
    if cfg.get("alpha") is None:
        raise ValidationError("--alpha or --alpha-file is required")
    parts = [t for t in str(cfg["alpha"]).replace(",", " ").split() if t]
    if len(parts) > INLINE_CAP:
        raise ValidationError(f"inline lists are capped at {INLINE_CAP} entries; use --alpha-file")
    return parse_prefs(parts)


def _p(cfg):
    if cfg.get("p") is None:
        raise ValidationError("--p is required")
    return an.parse_p(str(cfg["p"]))


def _need(cfg, *names):
    for name in names:
        if cfg.get(name) is None:
            raise ValidationError(f"--{name.replace('_', '-')} is required")
    return [cfg[name] for name in names]


def _params(cfg) -> WalkParameters:
    p = _p(cfg)
    return WalkParameters(p, Boundary(cfg["boundary"]), cfg["step_cap"], cfg.get("escape_margin"))


def _subsets(text):
    if not text:
        return None
    return [tuple(int(x) for x in part.split(",") if x.strip()) for part in text.split(";") if part.strip()]


def _num(v):
    """JSON-ready form: exact rationals become strings, numpy scalars become Python numbers."""
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, an.ProbabilityValue):
        return str(v.value) if isinstance(v.value, Fraction) else float(v.value)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if hasattr(v, "value") and isinstance(v.value, str):  # enums
        return v.value
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _mode(p):
    return an.mode_of(p).value


# -- subcommands ------------------------------------------------------------------------


def cmd_classify(cfg):
    return asdict(classify(_alpha(cfg)))


def cmd_park(cfg):
    r = classical_park(_alpha(cfg))
    return {
        "outcome": list(r.outcome), "spots": list(r.spots), "lucky": list(r.lucky),
        "failed_cars": list(r.failed_cars), "total_displacement": r.total_displacement,
    }


def cmd_simulate(cfg):
    alpha = _alpha(cfg)
    params = _params(cfg)
    stats = batch_simulate(alpha, params, cfg["seed"], cfg["trials"])
    out = stats.as_dict()
    out["mode"] = _mode(params.p)
    return out


def _alpha_p(cfg):
    return _alpha(cfg), _p(cfg)


FORMULAS = {
    "open-prob-single": lambda c: an.open_prob_single(*_need(c, "i", "s"), _p(c)),
    "open-prob-all": lambda c: an.open_prob_all(*_alpha_p(c)),
    "open-time-single": lambda c: an.open_expected_time_single(*_need(c, "i", "s"), _p(c)),
    "open-time-all": lambda c: an.open_expected_time_all(*_alpha_p(c)),
    "open-time-all-half": lambda c: an.open_expected_time_all_half(_alpha(c)),
    "unbounded-prob-single": lambda c: an.unbounded_prob_single(*_need(c, "d"), _p(c)),
    "unbounded-prob-series": lambda c: an.unbounded_prob_series(*_need(c, "d"), _p(c), c["tolerance"]),
    "unbounded-prob-all": lambda c: an.unbounded_prob_all(*_alpha_p(c)),
    "unbounded-time": lambda c: an.unbounded_expected_time(*_need(c, "d"), _p(c)),
    "unbounded-variance": lambda c: an.unbounded_variance(*_need(c, "d"), _p(c)),
    "unbounded-time-all": lambda c: an.unbounded_expected_time_all(*_alpha_p(c)),
    "unbounded-variance-all": lambda c: an.unbounded_variance_all(*_alpha_p(c)),
    "time-via-paths": lambda c: an.expected_time_via_paths(*_need(c, "i", "s"), _p(c), c["tolerance"]),
    "ruin-path-count": lambda c: an.ruin_path_count(*_need(c, "b", "k")),
    "catalan-convolution": lambda c: an.catalan_convolution(*_need(c, "d", "ell")),
    "bounded-path-count": lambda c: an.bounded_path_count(*_need(c, "i", "j", "k")),
    "open-time-residuals": lambda c: an.verify_open_time_solution(*_need(c, "i"), _p(c)),
    "joint-law": lambda c: an.exact_joint_law(_alpha(c), _p(c), c["boundary"]),
}


def cmd_exact(cfg):
    name = cfg["formula"]
    val = FORMULAS[name](cfg)
    out = {"formula": name}
    if cfg.get("p") is not None:
        out["mode"] = _mode(_p(cfg))
    if isinstance(val, an.SeriesResult):
        out.update(asdict(val))
    elif isinstance(val, an.ResidualReport):
        out.update({"residuals": list(val.residuals), "max_residual": val.max_residual})
    elif isinstance(val, dict):
        out["law"] = {"".join(map(str, k)): v for k, v in sorted(val.items())}
    else:
        out["value"] = val
    return out


def _count_value(cfg):
    what = cfg["what"]
    if what == "catalan":
        return cat.catalan(*_need(cfg, "n"))
    if what == "pf-total":
        (n,) = _need(cfg, "n")
        return (n + 1) ** (n - 1)
    if what == "wipf-entry":
        return cat.count_wipf_entry(*_need(cfg, "n", "i", "j"))
    if what == "last-entry":
        return list(cat.last_entry_distribution(*_need(cfg, "n")).counts)
    if what == "expected-last":
        return cat.expected_last_entry(*_need(cfg, "n"))
    if what == "expected-last-printed":
        return cat.expected_last_entry_printed(*_need(cfg, "n"))
    if what == "lucky-set":
        n, lucky = _need(cfg, "n", "lucky")
        return cat.lucky_set_probability(n, [int(x) for x in str(lucky).split(",") if x.strip()])
    if what == "lucky-count":
        return list(cat.lucky_count_distribution(*_need(cfg, "n")))
    if what == "lucky-count-printed":
        return list(cat.lucky_count_distribution_printed(*_need(cfg, "n")))
    if what == "expected-lucky":
        return cat.expected_lucky(*_need(cfg, "n"))
    if what == "asymptotic":
        (n,) = _need(cfg, "n")
        est = cat.asymptotic_estimate(cfg["formula_id"], n, cfg.get("j"))
        return {"value": est.value, "exact": est.exact, "ratio": est.ratio}
    raise ValidationError(f"unknown count {what!r}")


COUNTS = ("catalan", "pf-total", "wipf-entry", "last-entry", "expected-last", "expected-last-printed",
          "lucky-set", "lucky-count", "lucky-count-printed", "expected-lucky", "asymptotic")


def cmd_count(cfg):
    return {"what": cfg["what"], "value": _count_value(cfg)}


def cmd_sample(cfg):
    n, count = _need(cfg, "n", "count")
    sampler = SamplerConfig(Family(cfg["family"]), n, cfg["seed"])
    return {"family": sampler.family.value, "samples": [list(sample(sampler, cfg["start"] + k).prefs) for k in range(count)]}


def _suite_identities(n_max):
    rep = cat.identity_checks(n_max)
    return rep.ok, {"failures": [list(f) for f in rep.failures]}


def _suite_residuals(n_max):
    bad = []
    for i in range(2, n_max + 1):
        for p in (Fraction(1, 3), Fraction(1, 2), Fraction(3, 4)):
            if an.verify_open_time_solution(i, p).max_residual != 0:
                bad.append([i, str(p)])
    return not bad, {"nonzero": bad}


def _suite_oracles(n_max):
    """Exhaustive WIPF enumeration against the counting formulas, n <= min(n_max, 10)."""
    bad = []
    for n in range(1, min(n_max, 10) + 1):
        stats = cat.enumerate_wipf_stats(n)
        if stats["total"] != cat.catalan(n):
            bad.append(["catalan", n])
        for i in range(1, n + 1):
            for j in range(1, i + 1):
                if stats["entry"].get((i, j), 0) != cat.count_wipf_entry(n, i, j):
                    bad.append(["wipf-entry", n, i, j])
        last = [stats["entry"].get((n, j), 0) for j in range(1, n + 1)]
        if last != list(cat.last_entry_distribution(n).counts):
            bad.append(["last-entry", n])
        for lk, c in stats["lucky_sets"].items():
            if cat.lucky_set_probability(n, lk) != Fraction(c, stats["total"]):
                bad.append(["lucky-set", n, list(lk)])
        dist = cat.lucky_count_distribution(n)
        if [Fraction(c, stats["total"]) for c in stats["lucky_counts"]] != list(dist):
            bad.append(["lucky-count", n])
    return not bad, {"failures": bad}


SUITES = {"identities": _suite_identities, "residuals": _suite_residuals, "oracles": _suite_oracles}


def cmd_verify(cfg):
    names = list(SUITES) if cfg["suite"] == "all" else [cfg["suite"]]
    out = {}
    ok = True
    for name in names:
        passed, detail = SUITES[name](cfg["n_max"])
        out[name] = {"ok": passed, **detail}
        ok &= passed
    out["ok"] = ok
    if not ok:
        raise CheckFailed(out)
    return out


def cmd_correlate(cfg):
    rep = ex.correlation_test(_alpha(cfg), _params(cfg), cfg["seed"], cfg["trials"], _subsets(cfg.get("subsets")))
    out = rep.as_dict()
    out["violations"] = len(rep.violations)
    if rep.violations and cfg["boundary"] == Boundary.OPEN.value:
        raise CheckFailed(out)
    return out


def cmd_chernoff(cfg):
    deltas = [float(x) for x in str(cfg["deltas"]).split(",") if x.strip()]
    rep = ex.chernoff_check(_alpha(cfg), _params(cfg), cfg["seed"], cfg["trials"], deltas)
    out = rep.as_dict()
    if not rep.ok:
        raise CheckFailed(out)
    return out


def cmd_heatmap(cfg):
    n = _need(cfg, "n")[0]
    grid = ex.heatmap(n, cfg["p_resolution"], cfg["y_resolution"])
    props = ex.heatmap_properties(grid)
    if cfg.get("pgm"):
        ex.write_heatmap_pgm(grid, cfg["pgm"])
    out = {
        "n": grid.n, "total": grid.total, "exact": grid.exact, "properties": props,
        "p_grid": list(grid.p_grid), "y_grid": list(grid.y_grid), "cells": [list(c) for c in grid.cells],
        "_grid": grid,
    }
    if not all(props.values()):
        raise CheckFailed(out)
    return out


COMMANDS = {
    "classify": cmd_classify, "park": cmd_park, "simulate": cmd_simulate, "exact": cmd_exact,
    "sample": cmd_sample, "count": cmd_count, "verify": cmd_verify, "correlate": cmd_correlate,
    "chernoff": cmd_chernoff, "heatmap": cmd_heatmap,
}


# -- parser ---------------------------------------------------------------------------------


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def build_parser() -> Parser:
    parser = Parser(prog="parkwalk", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", help="replay the run stored in this JSON file (an earlier output or a bare config)")
    sub = parser.add_subparsers(dest="command", parser_class=Parser)

    def common(sp, *, alpha=False, p=False, walk=False, seed=False, trials=None):
        sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
        sp.add_argument("--output", help="write here instead of stdout")
        if alpha:
            sp.add_argument("--alpha", help="comma-separated preference list (at most 10^4 entries)")
            sp.add_argument("--alpha-file", help="file of whitespace/comma separated preferences")
        if p:
            sp.add_argument("--p", help="right-step probability: a/b for exact, decimal for float")
        if walk:
            sp.add_argument("--boundary", choices=[b.value for b in Boundary], default="open")
            sp.add_argument("--step-cap", type=int, default=10**6)
            sp.add_argument("--escape-margin", type=int)
        if seed:
            sp.add_argument("--seed", type=int, help=f"default: ${SEED_ENV} or 0")
        if trials is not None:
            sp.add_argument("--trials", type=int, default=trials)

    common(sub.add_parser("classify", help="parking-function predicates"), alpha=True)
    common(sub.add_parser("park", help="deterministic protocol"), alpha=True)
    common(sub.add_parser("simulate", help="Monte Carlo batch"), alpha=True, p=True, walk=True, seed=True,
           trials=10**5)

    sp = sub.add_parser("exact", help="closed-form analytics by name")
    common(sp, alpha=True, p=True)
    sp.add_argument("--formula", required=True, choices=sorted(FORMULAS))
    sp.add_argument("--boundary", choices=[b.value for b in Boundary], default="open")
    for name in ("i", "s", "d", "j", "k", "b", "ell"):
        sp.add_argument(f"--{name}", type=int)
    sp.add_argument("--tolerance", type=float, default=an.DEFAULT_TOL)

    sp = sub.add_parser("sample", help="uniform PF / WIPF / PF_ID draws")
    common(sp, seed=True)
    sp.add_argument("--family", choices=[f.value for f in Family], required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--start", type=int, default=0)

    sp = sub.add_parser("count", help="Catalan and WIPF counting queries")
    common(sp)
    sp.add_argument("--what", choices=COUNTS, required=True)
    for name in ("n", "i", "j"):
        sp.add_argument(f"--{name}", type=int)
    sp.add_argument("--lucky", help="comma-separated lucky set")
    sp.add_argument("--formula-id", choices=cat.FORMULAS, default="wipf-fraction")

    sp = sub.add_parser("verify", help="exact identity sweeps and oracle cross-checks")
    common(sp)
    sp.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    sp.add_argument("--n-max", type=int, default=10)

    sp = sub.add_parser("correlate", help="negative-correlation test of the parked flags")
    common(sp, alpha=True, p=True, walk=True, seed=True, trials=10**6)
    sp.add_argument("--subsets", help="semicolon-separated subsets, e.g. '1,2,3;2,3'")

    sp = sub.add_parser("chernoff", help="tail bounds on the number of parked cars")
    common(sp, alpha=True, p=True, walk=True, seed=True, trials=10**5)
    sp.add_argument("--deltas", default="0.25,0.5,0.75,1.0")

    sp = sub.add_parser("heatmap", help="cumulative park-probability grid over identity-outcome lists")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--p-resolution", type=int, default=20)
    sp.add_argument("--y-resolution", type=int, default=20)
    sp.add_argument("--pgm", help="also write an 8-bit PGM here")
    return parser


def _resolve(argv) -> dict:
    args = build_parser().parse_args(argv)
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        cfg = doc.get("config", doc)
        if cfg.get("command") not in COMMANDS:
            raise ValidationError("config has no valid 'command'")
        # fill in any defaults the stored config omits
        base = vars(build_parser().parse_args([cfg["command"], *_required_stub(cfg["command"])]))
        base.update(cfg)
        base.pop("config", None)
        return base
    if not args.command:
        raise UsageError(build_parser().format_usage() + "parkwalk: error: a subcommand or --config is required")
    cfg = vars(args)
    cfg.pop("config", None)
    if "seed" in cfg and cfg["seed"] is None:
        cfg["seed"] = _default_seed()
    return cfg


def _required_stub(command):
    return {"exact": ["--formula", "open-prob-all"], "sample": ["--family", "PF"], "count": ["--what", "catalan"]}.get(
        command, [])


def _render(cfg, result) -> str:
    grid = result.pop("_grid", None) if isinstance(result, dict) else None
    config_json = json.dumps(cfg, sort_keys=True, default=_num)
    fmt = cfg.get("format", "json")
    if fmt == "text" and isinstance(result, dict) and "value" in result:
        v = result["value"]
        if isinstance(v, (Fraction, an.ProbabilityValue, int, float)):
            return f"{v}\n"
        return json.dumps(v, default=_num) + "\n"
    if fmt == "csv":
        if grid is None:
            raise ValidationError("csv output is available for heatmap only")
        lines = ["p,y,count,total"]
        for p, col in zip(grid.p_grid, grid.cells):
            for y, v in zip(grid.y_grid, col):
                lines.append(f"{ex._fmt(p)},{ex._fmt(y)},{v},{grid.total}")
        lines.append(f"# config={config_json}")
        return "\n".join(lines) + "\n"
    doc = {"config": cfg, "result": result}
    return json.dumps(doc, sort_keys=True, indent=2, default=_num) + "\n"


def _emit(cfg, text):
    if cfg.get("output"):
        Path(cfg["output"]).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = _resolve(argv)
        try:
            result = COMMANDS[cfg["command"]](cfg)
            code = 0
        except CheckFailed as fail:
            result, code = fail.payload, 2
        _emit(cfg, _render(cfg, result))
        return code
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValidationError, DomainError, ValueError, OSError) as exc:
        print(f"parkwalk: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
