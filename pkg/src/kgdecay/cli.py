"""Batch runner for the decay experiments.

Configuration is a flat ``key=value`` file (``#`` starts a comment).  Each
run writes ``<experiment>.csv`` and ``summary.json`` into the output
directory and exits nonzero when a threshold fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (OperatorSample, bump_amplitude, decay_fit, f_space_op_norm,
                       interp_check, power_amplitude,
                       oscillatory_sup_check, report_record, spectral_diff_matrix)
from .born import born_series
from .core import (GridSpec, KGState, PotentialSpec, WeightedNormKind, chi_band,
                   make_grid, weighted_norm)
from .free_kg import bj_operator_matrix, free_evolution_matrix, free_kernel, green_u
from .oracle_fd import StepperConfig, leapfrog_evolve
from .perturbed import PcOperator, SpectralPropagator
from .scattering import RESONANCE_KS, resonance_check, scattering_coeffs, wronskians

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_text", "run", "main",
           "EXPERIMENTS"]

log = logging.getLogger("kgdecay")

EXPERIMENTS = ("free-kernel", "free-decay", "scattering", "resonance", "evolve", "born",
               "perturbed-decay", "interp-check", "osc-check")


class ConfigError(ValueError):
    pass


def _tlist(text: str):
    """``a,b,c`` or ``a..b`` (log-spaced, ``n_t`` points)."""
    text = text.strip()
    if ".." in text:
        a, b = text.split("..")
        return ("range", float(a), float(b))
    vals = tuple(float(v) for v in text.split(",") if v.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


_TYPES = {
    "experiment": str, "m": float, "potential": str, "c": float, "w": float,
    "beta": float, "L": float, "N": int, "k_max": float, "n_k": int,
    "sigma": float, "sigma1": float, "t_list": _tlist, "n_t": int, "seed": int,
    "derivative": str, "dt": float, "n_trials": int,
}

_COMMON = {"m": 1.0, "w": 1.0, "beta": 3.0, "n_t": 8, "seed": 0, "derivative": "fd2",
           "dt": 0.005, "n_trials": 100, "sigma1": 2.0}

_NONRES = {"potential": "sech_squared", "c": -0.4}

_PER_EXPERIMENT = {
    "free-kernel": {"L": 20.0, "N": 16, "k_max": 100.0, "n_k": 8192, "t_list": (10.0,),
                    "potential": "zero"},
    "free-decay": {"L": 128.0, "N": 256, "sigma": 1.1, "t_list": ("range", 10.0, 100.0),
                   "potential": "zero"},
    "scattering": {"L": 40.0, "N": 16, "k_max": 10.0, "n_k": 100, "potential": "zero"},
    "resonance": {"L": 40.0, "N": 16, "potential": "zero"},
    "evolve": {"L": 64.0, "N": 512, "t_list": (20.0,), **_NONRES},
    "born": {"L": 128.0, "N": 1024, "sigma": 1.0, "t_list": ("range", 10.0, 100.0), **_NONRES},
    "perturbed-decay": {"L": 128.0, "N": 512, "sigma": 1.6,
                        "t_list": ("range", 20.0, 200.0), **_NONRES},
    "interp-check": {"L": 128.0, "N": 512, "sigma": 1.0, "t_list": (10.0, 15.0, 20.0),
                     "potential": "zero"},
    "osc-check": {"L": 20.0, "N": 16, "t_list": ("range", 1.0, 100.0), "potential": "zero"},
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def experiment(self) -> str:
        return self.values["experiment"]

    @property
    def times(self) -> np.ndarray:
        t = self.values["t_list"]
        if t[0] == "range":
            return np.geomspace(t[1], t[2], self.values["n_t"])
        return np.asarray(t, dtype=float)

    def potential(self) -> PotentialSpec:
        kind = self.values["potential"]
        if kind == "zero":
            return PotentialSpec.zero()
        beta = self.values["beta"] if kind == "power" else 0.0
        return PotentialSpec(kind, float(self.values["c"]), self.values["w"], beta)

    def grid(self) -> GridSpec:
        v = self.values
        return make_grid(v["L"], v["N"], v.get("k_max") or 20.0, v.get("n_k") or 1024)

    def echo(self) -> dict:
        out = {}
        for k in sorted(self.values):
            v = self.values[k]
            if k == "t_list":
                v = self.times.tolist()
            out[k] = v
        return out


def _convert(key, raw, where):
    if key not in _TYPES:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return _TYPES[key](raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {raw.strip()!r} ({exc})") from None


def _parse_pairs(lines, source):
    out = {}
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{no}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        out[key] = _convert(key, raw, where)
    return out


def _validate(values: dict) -> RunConfig:
    exp = values.get("experiment")
    if exp is None:
        raise ConfigError("missing required key 'experiment'")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; choose from {', '.join(EXPERIMENTS)}")
    full = dict(_COMMON)
    full.update({"c": None, "sigma": None, "k_max": None, "n_k": None})
    full.update(_PER_EXPERIMENT[exp])
    full.update(values)
    N = full["N"]
    if N < 16 or N % 2:
        raise ConfigError(f"N={N}: the grid needs an even N >= 16")
    if not full["L"] > 0:
        raise ConfigError("L must be positive")
    if not full["m"] > 0:
        raise ConfigError("m must be positive")
    if full["n_t"] < 2:
        raise ConfigError("n_t must be at least 2")
    if full["potential"] not in ("zero", "sech_squared", "gaussian", "power"):
        raise ConfigError(f"unknown potential {full['potential']!r}")
    if full["derivative"] not in ("spectral", "fd2"):
        raise ConfigError(f"unknown derivative {full['derivative']!r}")
    if full.get("potential") != "zero" and full.get("c") is None:
        full["c"] = -0.4
    return RunConfig(full)


def parse_text(text: str, overrides=(), source: str = "<config>") -> RunConfig:
    values = _parse_pairs(text.splitlines(), source)
    extra = _parse_pairs(overrides, "--override")
    values.update(extra)
    return _validate(values)


def parse_config(path, overrides=()) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    return parse_text(path.read_text(), overrides, str(path))


# --------------------------------------------------------------------------
# experiments: each returns (header, rows, results, failures)
# --------------------------------------------------------------------------

def _exp_free_kernel(cfg):
    m = cfg["m"]
    t = float(cfg.times[0])
    grid = cfg.grid()
    rng = np.random.default_rng(cfg["seed"])
    x = rng.uniform(-4, 4, 20)
    y = x + rng.uniform(-8, 8, 20)
    xf = rng.uniform(-4, 4, 5)
    yf = xf + rng.choice([-1.0, 1.0], 5) * rng.uniform(12, 18, 5)
    xa, ya = np.concatenate([x, xf]), np.concatenate([y, yf])
    val = free_kernel(t, xa, ya, m, grid)
    exact = green_u(t, np.abs(xa - ya), m)
    near = np.abs(xa - ya) <= 8
    rel = float(np.max(np.abs(val[near] - exact[near]) / np.abs(exact[near])))
    far = float(np.max(np.abs(val[~near])))
    rows = [[a, b, abs(a - b), v.real, v.imag, e] for a, b, v, e in zip(xa, ya, val, exact)]
    fails = []
    if rel > 1e-3:
        fails.append(f"relative error {rel:.3e} > 1e-3 inside |x-y| <= 8")
    if far >= 1e-2:
        fails.append(f"|kernel| {far:.3e} >= 1e-2 at |x-y| >= 12")
    res = [{"t": t, "max_rel_error": rel, "max_far_abs": far}]
    return ["x", "y", "r", "Re_kernel", "Im_kernel", "green_u"], rows, res, fails


def _exp_free_decay(cfg):
    grid = cfg.grid()
    D = spectral_diff_matrix(grid)
    ts = cfg.times
    s = cfg["sigma"]
    vals = [f_space_op_norm(free_evolution_matrix(grid, t, cfg["m"]), grid, s, s, D) for t in ts]
    fit = decay_fit(ts, vals)
    ok = -0.65 <= fit.exponent <= -0.40
    res = [report_record("free-decay", {"sigma": s}, fit, ok)]
    fails = [] if ok else [f"exponent {fit.exponent:.3f} outside [-0.65, -0.40]"]
    return ["t", "norm"], [[t, v] for t, v in zip(ts, vals)], res, fails


def _exp_scattering(cfg):
    V = cfg.potential()
    k = np.linspace(0.1, cfg["k_max"], cfg["n_k"])
    tab = scattering_coeffs(V, k, L=cfg["L"])
    defect = float(tab.unitarity_defect.max())
    fails = []
    if defect >= 1e-6:
        fails.append(f"unitarity defect {defect:.3e} >= 1e-6")
    res = {"max_unitarity_defect": defect}
    if V.is_zero:
        dt = float(np.max(np.abs(tab.T - 1)))
        dr = float(max(np.abs(tab.R_plus).max(), np.abs(tab.R_minus).max()))
        res.update(max_abs_T_minus_1=dt, max_abs_R=dr)
        if dt > 1e-10 or dr > 1e-10:
            fails.append("zero potential must give T = 1 and R = 0")
    header = ["k", "ReW", "ImW", "ReT", "ImT", "ReRp", "ImRp", "ReRm", "ImRm",
              "unitarity_defect"]
    return header, tab.rows(), [res], fails


def _exp_resonance(cfg):
    V = cfg.potential()
    rep = resonance_check(V, cfg["m"], L=cfg["L"])
    W, _, _ = wronskians(V, np.array(RESONANCE_KS), L=cfg["L"])
    rows = [[k, w.real, w.imag] for k, w in zip(RESONANCE_KS, W)]
    res = [{"w0_abs": rep.w0_abs, "threshold": rep.threshold, "is_resonant": rep.is_resonant}]
    return ["k", "ReW", "ImW"], rows, res, []


def _smooth_data(grid):
    x = grid.x
    g = np.exp(-x ** 2 / 4)
    return KGState.from_arrays(grid, g * np.cos(x), 0.3 * x * g)


def _exp_evolve(cfg):
    grid, m, V = cfg.grid(), cfg["m"], cfg.potential()
    t = float(cfg.times[-1])
    band = chi_band(0.0, m * m + 16, 0.5, 4.0)
    prop = SpectralPropagator(V, m, band, grid, t)
    out = prop.evolve_array(_smooth_data(grid).as_array(), [0.0, t])
    phi0 = KGState.from_stacked(grid, out[0])
    spec = KGState.from_stacked(grid, out[1])
    lf = leapfrog_evolve(phi0, StepperConfig(cfg["dt"], "spectral", t), V, m)
    err = (lf - spec).l2()
    rows = [[x, p.real, p.imag, q.real, q.imag]
            for x, p, q in zip(grid.x, spec.psi.values, spec.psidot.values)]
    fails = [] if err < 1e-3 else [f"spectral vs leapfrog L2 error {err:.3e} >= 1e-3"]
    res = [{"t": t, "dt": cfg["dt"], "l2_error": err}]
    return ["x", "Re_psi", "Im_psi", "Re_psidot", "Im_psidot"], rows, res, fails


def _exp_born(cfg):
    grid, m, V = cfg.grid(), cfg["m"], cfg.potential()
    x = grid.x
    s0 = KGState.from_arrays(grid, np.exp(-x ** 2 / 4), 0 * x)
    ts = cfg.times
    bs = born_series(ts, s0, V, m)
    kind = WeightedNormKind("Linf_pair_sigma", -cfg["sigma"])
    table = bs.norms(kind, cfg["derivative"])
    rows = [[t] + list(r) for t, r in zip(ts, table)]
    res, fails = [], []
    if V.is_zero:
        top = float(np.abs(table[:, 1:]).max())
        res.append({"max_higher_order_norm": top})
        if top != 0.0:
            fails.append("zero potential must give vanishing Born corrections")
    else:
        fit = decay_fit(ts, table[:, 3])
        ok = fit.exponent <= -0.4
        res.append(report_record("born-remainder", {"sigma": cfg["sigma"]}, fit, ok))
        res.append({"gap_first_time": bs.gap(0)})
        if not ok:
            fails.append(f"remainder slope {fit.exponent:.3f} > -0.4")
    return ["t", "norm_U0", "norm_U1", "norm_U2", "norm_W"], rows, res, fails


def _exp_perturbed_decay(cfg):
    grid, m, V = cfg.grid(), cfg["m"], cfg.potential()
    x = grid.x
    ts = cfg.times
    band = chi_band(0.0, m * m + 16, 0.5, 4.0)
    pc = PcOperator.build(V, m, grid)
    s0 = pc(KGState.from_arrays(grid, np.exp(-x ** 2 / 4), 0 * x))
    prop = SpectralPropagator(V, m, band, grid, float(ts.max()))
    out = prop.evolve_array(s0.as_array(), ts)
    kind = WeightedNormKind("F_sigma", -cfg["sigma"])
    vals = [weighted_norm(KGState.from_stacked(grid, o), kind, cfg["derivative"]) for o in out]
    fit = decay_fit(ts, vals)
    resonant = resonance_check(V, m).is_resonant
    ok = fit.exponent >= -0.7 if resonant else fit.exponent <= -1.3
    res = [report_record("perturbed-decay", {"sigma": cfg["sigma"], "resonant": resonant},
                         fit, ok)]
    fails = [] if ok else [f"exponent {fit.exponent:.3f} violates the "
                           f"{'resonant >= -0.7' if resonant else 'nonresonant <= -1.3'} bound"]
    return ["t", "norm"], [[t, v] for t, v in zip(ts, vals)], res, fails


def _exp_interp_check(cfg):
    grid, m = cfg.grid(), cfg["m"]
    s0, s1 = cfg["sigma"], cfg["sigma1"]
    thetas = (0.25, 0.5, 0.75)
    rows, res, fails = [], [], []
    for t in cfg.times:
        K = bj_operator_matrix(0, t, m, grid)
        rep = interp_check(lambda s: OperatorSample(K, grid.x, s, s), s0, s1, thetas)
        rows += [[t, th, v, b] for th, v, b in zip(thetas, rep.values, rep.bounds)]
        res.append({"t": float(t), "ok": rep.ok})
        if not rep.ok:
            fails.append(f"interpolation inequality fails for B0 at t={t}")
    rng = np.random.default_rng(cfg["seed"])
    xs = np.linspace(-10, 10, 64)
    bad = 0
    for _ in range(cfg["n_trials"]):
        K = np.diag(rng.normal(size=xs.size))
        rep = interp_check(lambda s: OperatorSample(K, xs, s, s), s0, s1, thetas)
        bad += not rep.ok
    res.append({"random_diagonal_trials": cfg["n_trials"], "violations": bad})
    if bad:
        fails.append(f"{bad} random diagonal kernels violate the inequality")
    return ["t", "theta", "M", "bound"], rows, res, fails


def _exp_osc_check(cfg):
    m, ts = cfg["m"], cfg.times
    kb, ab = bump_amplitude(m)
    kl, al = power_amplitude(3.0)
    rb = oscillatory_sup_check(kb, ab, ts, m)
    rl = oscillatory_sup_check(kl, al, ts, m)
    res, fails = [], []
    for name, r in (("bump", rb), ("power", rl)):
        ok = r.fit.exponent <= -0.4
        res.append(report_record(f"osc-{name}", {"m": m}, r.fit, ok))
        if not ok:
            fails.append(f"{name} sup exponent {r.fit.exponent:.3f} > -0.4")
    rows = [[t, a, b] for t, a, b in zip(ts, rb.sups, rl.sups)]
    return ["t", "sup_bump", "sup_power"], rows, res, fails


_RUNNERS = {
    "free-kernel": _exp_free_kernel, "free-decay": _exp_free_decay,
    "scattering": _exp_scattering, "resonance": _exp_resonance, "evolve": _exp_evolve,
    "born": _exp_born, "perturbed-decay": _exp_perturbed_decay,
    "interp-check": _exp_interp_check, "osc-check": _exp_osc_check,
}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v) + 0.0:.12e}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def run(cfg: RunConfig, out_dir) -> int:
    """Run one experiment, write its CSV and summary, return the exit status."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log.info("running %s", cfg.experiment)
    header, rows, results, fails = _RUNNERS[cfg.experiment](cfg)
    with open(out_dir / f"{cfg.experiment}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    summary = {"experiment": cfg.experiment, "config_echo": cfg.echo(),
               "results": results, "pass": not fails}
    with open(out_dir / "summary.json", "w", newline="\n") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for f in fails:
        print(f"FAIL [{cfg.experiment}]: {f}", file=sys.stderr)
    return 1 if fails else 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="kgdecay", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="flat key=value config file")
    ap.add_argument("--out-dir", default=".", help="directory for CSV and summary.json")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (repeatable)")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config, args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg, args.out_dir)
    except Exception as exc:  # module errors end the run with a message
        print(f"error in {cfg.experiment}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
