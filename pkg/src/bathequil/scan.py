"""Grid scans driven by a flat ``key = value`` configuration file.

Example configuration::

    # log(Z/Z_can) surface
    quantity = zratio
    gamma = 0.1
    theta = log:0.1:100:30
    d = log:1:100:30

Axes are either ``log:lo:hi:n``, ``lin:lo:hi:n`` or a comma separated list.
``quantity`` may list several quantities; one CSV is written per quantity.
"""

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bath import SpectralDensity, ThermalPoint
from .bound import bound_functional, harmonic_system
from .entanglement import CoupledPair, pair_covariance
from .errors import AccuracyError, BathEquilError, DomainError
from .gaussian import logarithmic_negativity, mode_entropy, partial_transpose, symplectic_eigenvalues
from .matsubara import oscillator_observables
from . import oracle

QUANTITIES = ("zratio", "entropy", "qvar", "delta", "negativity", "bound", "oracle-check")
CSV_HEADER = "theta,d,gamma,c,value,err_estimate"

_DEFAULTS = {
    "c": "0",
    "accuracy": "1e-8",
    "oracle_n": "1000",
    "oracle_tol": "1e-3",
    "coupling": "q2",
    "levels": "40",
}
_REQUIRED = ("quantity", "gamma", "theta", "d")
_KEYS = set(_REQUIRED) | set(_DEFAULTS)


class ConfigError(BathEquilError):
    """Malformed configuration; ``line`` is 1-based or ``None``."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class ScanGrid:
    theta_axis: tuple
    d_axis: tuple
    gamma: float
    c: float = 0.0
    quantity: str = "zratio"

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise DomainError(f"unknown quantity {self.quantity!r}")
        for name in ("theta_axis", "d_axis"):
            axis = getattr(self, name)
            if len(axis) == 0:
                raise DomainError(f"{name} is empty")
            if any(not (v > 0.0 and math.isfinite(v)) for v in axis):
                raise DomainError(f"{name} must hold positive finite values")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise DomainError(f"{name} must be strictly increasing")
        if self.gamma < 0.0 or not 0.0 <= self.c < 1.0:
            raise DomainError("need gamma >= 0 and 0 <= c < 1")

    def points(self):
        """Grid points in output order: theta outer, d inner."""
        return [(t, d) for t in self.theta_axis for d in self.d_axis]


@dataclass(frozen=True)
class ScanConfig:
    quantities: tuple
    grid: ScanGrid
    accuracy: float
    oracle_n: int
    oracle_tol: float
    coupling: str
    levels: int
    text: str = field(repr=False, default="")

    def grid_for(self, quantity):
        g = self.grid
        return ScanGrid(g.theta_axis, g.d_axis, g.gamma, g.c, quantity)


def parse_axis(value):
    """Parse ``log:lo:hi:n``, ``lin:lo:hi:n`` or ``v1, v2, ...``."""
    value = value.strip()
    if not value:
        raise ValueError("empty axis")
    if value.startswith(("log:", "lin:")):
        parts = value.split(":")
        if len(parts) != 4:
            raise ValueError(f"axis {value!r} needs kind:lo:hi:n")
        lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
        if n < 1:
            raise ValueError("axis needs at least one point")
        if parts[0] == "log":
            if lo <= 0.0 or hi <= 0.0:
                raise ValueError("log axis bounds must be positive")
            axis = np.logspace(math.log10(lo), math.log10(hi), n) if n > 1 else np.array([lo])
        else:
            axis = np.linspace(lo, hi, n)
        return tuple(float(v) for v in axis)
    return tuple(float(v) for v in value.split(",") if v.strip())


def parse_config(text):
    """Parse configuration text into a :class:`ScanConfig`."""
    raw = {}
    where = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        raw[key] = value
        where[key] = lineno
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    values = dict(_DEFAULTS)
    values.update(raw)

    def convert(key, fn):
        try:
            return fn(values[key])
        except (ValueError, DomainError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", where.get(key)) from None

    quantities = convert("quantity", lambda v: tuple(q.strip() for q in v.split(",") if q.strip()))
    for q in quantities:
        if q not in QUANTITIES:
            raise ConfigError(f"unknown quantity {q!r}", where["quantity"])
    if not quantities:
        raise ConfigError("no quantity given", where["quantity"])
    theta = convert("theta", parse_axis)
    d_axis = convert("d", parse_axis)
    gamma = convert("gamma", float)
    c = convert("c", float)
    try:
        grid = ScanGrid(theta, d_axis, gamma, c, quantities[0])
    except DomainError as exc:
        key = "d" if "d_axis" in str(exc) else "theta" if "theta" in str(exc) else "gamma"
        raise ConfigError(str(exc), where.get(key)) from None
    levels = convert("levels", int)
    coupling = values["coupling"]
    if coupling not in ("q", "q2", "q2+q"):
        raise ConfigError(f"unknown coupling {coupling!r}", where.get("coupling"))
    return ScanConfig(
        quantities,
        grid,
        convert("accuracy", float),
        convert("oracle_n", int),
        convert("oracle_tol", float),
        coupling,
        levels,
        text,
    )


# -- single points -------------------------------------------------------------

@dataclass(frozen=True)
class PointResult:
    value: float
    err_estimate: float
    ok: bool
    message: str = ""


def _negativity_with_error(gs, err):
    nu = symplectic_eigenvalues(partial_transpose(gs, [1]))
    rel = float(np.max(err / np.maximum(np.abs(gs.sigma), 1e-300)))
    value = logarithmic_negativity(gs)
    n_small = int(np.sum(nu < 0.5))
    # a relative change eps in the covariance moves nu by at most eps * nu
    near = np.any(np.abs(nu - 0.5) <= rel * nu)
    return value, rel * max(n_small, 1 if near else 0)


def evaluate(quantity, theta, d, gamma, c=0.0, *, accuracy=1e-8, oracle_n=1000,
             oracle_tol=1e-3, coupling="q2", levels=40):
    """Evaluate one grid point; accuracy failures are reported, not raised."""
    sd = SpectralDensity(gamma, d)
    tp = ThermalPoint(theta)
    try:
        if quantity in ("zratio", "entropy", "qvar", "delta"):
            obs = oscillator_observables(sd, tp)
            if quantity == "zratio":
                value, err = obs.log_z_ratio, obs.errors["log_z"]
            elif quantity == "entropy":
                value = obs.log_entropy_ratio
                err = obs.errors["entropy"] / obs.entropy if obs.entropy > 0 else 0.0
            elif quantity == "qvar":
                value, err = obs.q_var, obs.errors["q_var"]
            else:
                value, err = obs.delta, obs.errors["delta"]
            ok = err <= accuracy
        elif quantity == "negativity":
            if c == 0.0:
                value, err = 0.0, 0.0
            else:
                gs, cov_err = pair_covariance(CoupledPair(c, sd), tp, full_output=True)
                value, err = _negativity_with_error(gs, cov_err)
            ok = err <= accuracy
        elif quantity == "bound":
            res = bound_functional(harmonic_system(levels, coupling), sd, tp)
            value, err = res.modulus, res.error
            ok = err <= accuracy
        elif quantity == "oracle-check":
            gaps = oracle_gaps(sd, tp, c, oracle_n)
            value = max(g["rel_gap"] for g in gaps.values())
            err = 0.0
            ok = value <= oracle_tol
        else:
            raise DomainError(f"unknown quantity {quantity!r}")
    except AccuracyError as exc:
        return PointResult(math.nan, float(exc.estimate), False, str(exc))
    return PointResult(float(value), float(err), bool(ok))


def oracle_value(quantity, sd, tp, c, n_bath):
    rule = oracle.DiscretizationRule(n_bath)
    if quantity == "negativity":
        sm = oracle.discretize(sd, rule, system_count=2, c=c)
        return logarithmic_negativity(oracle.quantum_reduced_state(sm, tp))
    sm = oracle.discretize(sd, rule)
    if quantity == "zratio":
        return oracle.partition_ratio(sm, tp)
    st = oracle.quantum_reduced_state(sm, tp).sigma
    if quantity == "qvar":
        return st[0, 0]
    if quantity == "delta":
        return st[1, 1] - st[0, 0]
    if quantity == "entropy":
        s_can = mode_entropy(0.5 / math.tanh(0.5 / tp.theta))
        return math.log(mode_entropy(math.sqrt(st[0, 0] * st[1, 1])) / s_can)
    raise DomainError(f"no oracle for quantity {quantity!r}")


def oracle_gaps(sd, tp, c, n_bath):
    """Analytic vs finite-bath values of every cross-checked observable."""
    obs = oscillator_observables(sd, tp)
    rule = oracle.DiscretizationRule(n_bath)
    sm = oracle.discretize(sd, rule)
    st = oracle.quantum_reduced_state(sm, tp).sigma
    pairs = {
        "qvar": (obs.q_var, st[0, 0]),
        "zratio": (obs.log_z_ratio, oracle.partition_ratio(sm, tp)),
        "entropy": (obs.entropy, mode_entropy(math.sqrt(st[0, 0] * st[1, 1]))),
    }
    if c > 0.0:
        two = oracle.discretize(sd, rule, system_count=2, c=c)
        cov = oracle.quantum_reduced_state(two, tp).sigma
        pairs["q1q2"] = (pair_covariance(CoupledPair(c, sd), tp).sigma[0, 2], cov[0, 2])
    out = {}
    for name, (analytic, exact) in pairs.items():
        gap = abs(analytic - exact)
        out[name] = {
            "analytic": float(analytic),
            "oracle": float(exact),
            "gap": float(gap),
            "rel_gap": float(gap / abs(exact)) if exact != 0.0 else float(gap),
        }
    return out


# -- scans ----------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def _evaluate_row(args):
    quantity, theta, d, cfg = args
    g = cfg.grid
    return evaluate(
        quantity, theta, d, g.gamma, g.c,
        accuracy=cfg.accuracy, oracle_n=cfg.oracle_n, oracle_tol=cfg.oracle_tol,
        coupling=cfg.coupling, levels=cfg.levels,
    )


@dataclass
class ScanOutcome:
    csv_text: dict
    manifest: dict

    @property
    def all_ok(self):
        return all(p["ok"] for p in self.manifest["points"])


def run_scan(cfg, jobs=None):
    """Evaluate every quantity over the grid; nothing is written to disk."""
    start = time.perf_counter()
    jobs = jobs or os.cpu_count() or 1
    tasks = [(q, t, d, cfg) for q in cfg.quantities for (t, d) in cfg.grid.points()]
    if jobs == 1 or len(tasks) == 1:
        results = [_evaluate_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_row, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    csv_text = {}
    points = []
    g = cfg.grid
    for q in cfg.quantities:
        csv_text[q] = [CSV_HEADER]
    for (q, t, d, _), res in zip(tasks, results):
        csv_text[q].append(",".join(_fmt(v) for v in (t, d, g.gamma, g.c, res.value, res.err_estimate)))
        entry = {"quantity": q, "theta": t, "d": d, "ok": res.ok}
        if res.message:
            entry["message"] = res.message
        points.append(entry)
    csv_text = {q: "\n".join(lines) + "\n" for q, lines in csv_text.items()}
    manifest = {
        "tool": "bathequil",
        "version": __version__,
        "config": {
            "text": cfg.text,
            "quantities": list(cfg.quantities),
            "gamma": g.gamma,
            "c": g.c,
            "theta_axis": list(g.theta_axis),
            "d_axis": list(g.d_axis),
            "accuracy": cfg.accuracy,
            "oracle_n": cfg.oracle_n,
            "oracle_tol": cfg.oracle_tol,
            "coupling": cfg.coupling,
            "levels": cfg.levels,
        },
        "outputs": [f"{q}.csv" for q in cfg.quantities],
        "wall_time_s": time.perf_counter() - start,
        "jobs": jobs,
        "points": points,
    }
    return ScanOutcome(csv_text, manifest)


def write_outputs(outcome, out_dir):
    """Write the CSV files and ``manifest.json`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    for q, text in outcome.csv_text.items():
        with open(os.path.join(out_dir, f"{q}.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(outcome.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path):
    """Read a configuration file or a previous run's ``manifest.json``."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        try:
            text = json.loads(text)["config"]["text"]
        except (ValueError, KeyError, TypeError):
            raise ConfigError(f"{path} is not a scan manifest") from None
    return parse_config(text)
