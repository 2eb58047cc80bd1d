"""Configuration-driven verification studies with CSV reports.

Each study emits rows (one per parameter combination, plus rate-fit summary
rows) with a fixed column set: kind, d, p, n, level, r, q, value, bound,
ratio, pass, source, seconds.  The source column tags the estimate a bound
check instantiates (L2, L6, L10, L12, T1, T2, T3, P1; identity rows use L1,
L3, L4).  Reports are deterministic for a given config and seed; per-row
timing is written only when `timing=on` so default CSV output is
byte-identical across runs.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import functions as fn
from .bspline import make_space, vanishing_subspace
from .geometry import (
    PullbackFunction,
    builtin_geometry,
    load_geometry,
    mapped_rayleigh,
    pullback_error_norm,
)
from .indices import (
    LevelRule,
    build_combination_set,
    lambda_eff,
    layer_cardinality,
    lemma3_oracle,
    sparse_dimension,
    theory,
)
from .quadrature import gram_matrix, l2_error_1d, project_1d
from .spaces import (
    combination_project,
    dimension_rank,
    equivalence_report,
    sparse_rayleigh,
)
from .tensorops import error_norm, function_norm

KINDS = (
    "univariate-convergence",
    "sparse-convergence",
    "mapped-convergence",
    "equivalence",
    "identities",
    "inverse-inequality",
    "dimensions",
)

CSV_COLUMNS = ("kind", "d", "p", "n", "level", "r", "q", "value", "bound",
               "ratio", "pass", "source", "seconds")


class ConfigError(ValueError):
    """Raised for unparseable or inconsistent study configurations."""


@dataclass(frozen=True)
class StudyConfig:
    kind: str
    d: int = 2
    p: tuple = (1,)
    n: tuple = ()
    r: int = 0
    q: tuple = ()
    target: str = ""
    geometry: str = ""
    variant: str = ""
    out: str = ""
    seed: int = 0
    d_max: int = 6
    n_max: int = 12
    rank_max: int = 5
    min_order: float = 0.0
    timing: str = "off"


_DEFAULTS = {
    "univariate-convergence": dict(d=1, p=(1, 2, 3), n=tuple(range(3, 8)),
                                   target="sin-2pi"),
    "sparse-convergence": dict(d=2, p=(1, 2), n=tuple(range(3, 9)),
                               target="sinpi-prod"),
    "mapped-convergence": dict(d=2, p=(2,), n=tuple(range(3, 8)),
                               target="sinpi-prod", geometry="distorted-square",
                               min_order=2.8),
    "equivalence": dict(d=2, p=(1, 2), n=tuple(range(2, 6))),
    "identities": dict(p=(1, 2, 3, 4), d_max=6, n_max=12),
    "inverse-inequality": dict(d=2, p=(2, 3), q=(1, 2), n=(3, 4, 5, 6),
                               variant="univariate"),
    "dimensions": dict(d=2, p=(1,), n=tuple(range(3, 11)), rank_max=5),
}


def _parse_ints(text):
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(tok) for tok in text.split(","))


def default_config(kind):
    if kind not in KINDS:
        raise ConfigError(f"unknown study kind '{kind}'; known: {', '.join(KINDS)}")
    return StudyConfig(kind=kind, **_DEFAULTS.get(kind, {}))


def parse_config(path, overrides=()):
    """Read a flat key=value config file and apply --set overrides."""
    pairs = []
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, "
                                      f"got {line!r}")
                key, value = line.split("=", 1)
                pairs.append((key.strip(), value.strip(), f"{path}:{lineno}"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs.append((key.strip(), value.strip(), "--set"))

    kv = {}
    for key, value, where in pairs:
        kv[key] = (value, where)
    if "kind" not in kv:
        raise ConfigError(f"{path}: missing required key 'kind'")
    kind = kv.pop("kind")[0]
    cfg = default_config(kind)
    for key, (value, where) in kv.items():
        try:
            if key in ("p", "n", "q"):
                cfg = replace(cfg, **{key: _parse_ints(value)})
            elif key in ("d", "r", "seed", "d_max", "n_max", "rank_max"):
                cfg = replace(cfg, **{key: int(value)})
            elif key in ("target", "geometry", "variant", "out", "timing"):
                cfg = replace(cfg, **{key: value})
            elif key == "min_order":
                cfg = replace(cfg, min_order=float(value))
            else:
                raise ConfigError(f"{where}: unknown config key '{key}'")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for '{key}': {value!r}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown study kind '{cfg.kind}'")
    if cfg.timing not in ("on", "off"):
        raise ConfigError("timing must be 'on' or 'off'")
    for p in cfg.p:
        if p < 0:
            raise ConfigError("degrees must be nonnegative")
        lam = lambda_eff(p)
        if cfg.kind in ("sparse-convergence", "mapped-convergence",
                        "equivalence", "dimensions", "inverse-inequality"):
            low = [n for n in cfg.n if n < lam]
            if low:
                raise ConfigError(f"levels {low} below the admissible minimum "
                                  f"{lam} for degree {p}")
        if cfg.kind == "univariate-convergence" and cfg.r > p:
            raise ConfigError(f"projection order r={cfg.r} exceeds degree {p}")
        if cfg.kind == "inverse-inequality":
            for q in cfg.q:
                if q > p:
                    raise ConfigError(f"inverse inequality needs q <= p, "
                                      f"got q={q}, p={p}")
    if cfg.kind == "inverse-inequality":
        if cfg.variant not in ("univariate", "sparse", "mapped"):
            raise ConfigError("variant must be univariate, sparse, or mapped")
        if cfg.variant == "mapped" and set(cfg.q) != {1}:
            raise ConfigError("the mapped variant measures the first-order "
                              "physical seminorm; set q=1")


@dataclass(frozen=True)
class Row:
    kind: str
    d: int
    p: object
    n: object
    level: str = ""
    r: object = ""
    q: object = ""
    value: float = None
    bound: float = None
    ratio: float = None
    passed: bool = True
    source: str = ""
    seconds: float = 0.0

    def csv_cells(self, timing):
        def num(x):
            if x is None or x == "":
                return ""
            if isinstance(x, bool):
                return "true" if x else "false"
            if isinstance(x, (int, np.integer)):
                return str(int(x))
            return f"{float(x):.12g}"

        secs = f"{self.seconds:.3f}" if timing == "on" else "0.000"
        return (self.kind, num(self.d), num(self.p), num(self.n), self.level,
                num(self.r), num(self.q), num(self.value), num(self.bound),
                num(self.ratio), "true" if self.passed else "false",
                self.source, secs)


@dataclass
class StudyReport:
    config: StudyConfig
    rows: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in self.rows:
                fh.write(",".join(row.csv_cells(self.config.timing)) + "\n")

    def summary_lines(self):
        out = []
        for row in self.rows:
            status = "pass" if row.passed else "FAIL"
            val = "" if row.value is None else f" value={row.value:.6g}"
            bnd = "" if row.bound is None else f" bound={row.bound:.6g}"
            out.append(f"[{status}] {row.kind} {row.source} d={row.d} "
                       f"p={row.p} n={row.n} level={row.level} r={row.r} "
                       f"q={row.q}{val}{bnd}")
        n_fail = sum(not r.passed for r in self.rows)
        out.append(f"{len(self.rows)} rows, {n_fail} failing")
        return out


def fit_rate(pairs, log_power=0):
    """Least-squares slope of log(error / |log h|^log_power) against log h.

    Needs at least two pairs with strictly decreasing h and positive errors.
    """
    if len(pairs) < 2:
        raise ValueError("rate fit needs at least two (h, error) pairs")
    h = np.array([a for a, _ in pairs], dtype=float)
    e = np.array([b for _, b in pairs], dtype=float)
    if np.any(np.diff(h) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    if np.any(e <= 0):
        raise ValueError("errors must be positive for a log fit")
    y = np.log(e) - log_power * np.log(np.abs(np.log(h)))
    return float(np.polyfit(np.log(h), y, 1)[0])


def _run_tasks(tasks, timing):
    """Run row-producing callables, possibly in parallel; order-independent."""
    workers = os.environ.get("STUDY_THREADS")
    workers = int(workers) if workers else (os.cpu_count() or 1)
    workers = max(1, min(workers, len(tasks) or 1))

    def timed(task):
        t0 = time.perf_counter()
        rows = task()
        dt = time.perf_counter() - t0
        if timing == "on":
            rows = [replace(r, seconds=dt / max(1, len(rows))) for r in rows]
        return rows

    if workers == 1:
        chunks = [timed(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(timed, tasks))
    return [row for chunk in chunks for row in chunk]


def _numkey(v):
    if isinstance(v, (int, float, np.integer, np.floating)):
        return (0, float(v), "")
    return (1, 0.0, str(v))


def _sorted_rows(rows):
    def key(row):
        return (row.kind, str(row.source), _numkey(row.d), _numkey(row.p),
                _numkey(row.n), row.level, _numkey(row.r), _numkey(row.q))

    return sorted(rows, key=key)


# ---------------------------------------------------------------------------
# study kinds


def _study_identities(cfg):
    tasks = []
    for d in range(2, max(cfg.d_max, 8) + 1):
        def t(d=d):
            dev = max(abs(sum((-1) ** l * math.comb(d - 1, l) * l ** i
                              for l in range(d)))
                      for i in range(d - 1))
            return [Row(cfg.kind, d, "", "", value=dev, bound=0,
                        passed=dev == 0, source="L1")]
        tasks.append(t)
    for d in range(2, cfg.d_max + 1):
        for p in cfg.p:
            def t(d=d, p=p):
                lam = lambda_eff(p)
                dev3 = 0
                dev4 = 0
                devcard = 0
                for n in range(lam, cfg.n_max + 1):
                    for ell in range(0, n + 1):
                        for k in range(0, d):
                            want = 1 if k == 0 else 0
                            dev3 = max(dev3, abs(lemma3_oracle(d, n, p, ell, k) - want))
                    cs = build_combination_set(d, n, p)
                    dev4 = max(dev4, abs(cs.coefficient_sum() - 1))
                    for l, layer in enumerate(cs.layers):
                        devcard = max(devcard, abs(len(layer)
                                                   - layer_cardinality(d, n, p, l)))
                return [
                    Row(cfg.kind, d, p, cfg.n_max, value=dev3, bound=0,
                        passed=dev3 == 0, source="L3"),
                    Row(cfg.kind, d, p, cfg.n_max, value=dev4, bound=0,
                        passed=dev4 == 0, source="L4"),
                    Row(cfg.kind, d, p, cfg.n_max, level="layer-count",
                        value=devcard, bound=0, passed=devcard == 0, source="L4"),
                ]
            tasks.append(t)
    return _run_tasks(tasks, cfg.timing)


def _study_dimensions(cfg):
    d = cfg.d
    tasks = []
    for p in cfg.p:
        for n in cfg.n:
            def t(p=p, n=n):
                sparse, full = sparse_dimension(d, n, p)
                ok = True
                lvl = ""
                if n <= cfg.rank_max:
                    rank = dimension_rank(LevelRule(d, n, p))
                    ok = rank == sparse
                    lvl = f"rank {rank}"
                return [Row(cfg.kind, d, p, n, level=lvl, value=sparse,
                            bound=full, ratio=sparse / full, passed=ok,
                            source="P1")]
            tasks.append(t)
    return _run_tasks(tasks, cfg.timing)


def _study_univariate(cfg):
    f = fn.target_function(cfg.target, 1)
    r = cfg.r
    rows = []
    for p in cfg.p:
        q = p + 1
        seminorm = function_norm(f, 1, "semi", q)
        tasks = []
        # levels with h*p >= 1 fall outside the estimate's hypothesis
        for lev in (n for n in cfg.n if n >= lambda_eff(p)):
            def t(p=p, lev=lev, q=q, seminorm=seminorm):
                space = make_space(p, lev)
                coeffs = project_1d(space, f, r)
                err = l2_error_1d(space, coeffs, f)
                bound = theory.c1(q, r) * space.h ** (q - r) * seminorm
                return [Row(cfg.kind, 1, p, lev, value=err, bound=bound,
                            ratio=err / bound, passed=err <= bound, source="L2")]
            tasks.append(t)
        prows = _run_tasks(tasks, cfg.timing)
        rows.extend(prows)
        pairs = sorted(((2.0 ** -row.n, row.value) for row in prows), reverse=True)
        order = fit_rate(pairs, log_power=0)
        target = q - r
        rows.append(Row(cfg.kind, 1, p, "", level="fit", r=r, value=order,
                        bound=target, passed=abs(order - target) <= 0.1,
                        source="L2"))
    return rows


def _study_sparse(cfg):
    d = cfg.d
    f = fn.target_function(cfg.target, d)
    rows = []
    for p in cfg.p:
        q = p + 1
        mixnorm = function_norm(f, d, "mix", q)
        c10 = theory.c10(d, q, 0)
        tasks = []
        for n in cfg.n:
            def t(p=p, n=n, q=q, mixnorm=mixnorm, c10=c10):
                rule = LevelRule(d, n, p)
                sg = combination_project(f, rule, r=0)
                err = error_norm(f, sg, "semi", 0)
                h = 2.0 ** -n
                bound = c10 * h ** q * abs(np.log(h)) ** (d - 1) * mixnorm
                return [Row(cfg.kind, d, p, n, value=err, bound=bound,
                            ratio=err / bound, passed=err <= bound, source="L6")]
            tasks.append(t)
        prows = _run_tasks(tasks, cfg.timing)
        rows.extend(prows)
        pairs = sorted(((2.0 ** -row.n, row.value) for row in prows), reverse=True)
        order = fit_rate(pairs, log_power=d - 1)
        rows.append(Row(cfg.kind, d, p, "", level="fit", value=order,
                        bound=q - 0.15, passed=order >= q - 0.15, source="L6"))
    return rows


def _load_geometry(cfg):
    name = cfg.geometry or "distorted-square"
    if os.path.exists(name):
        return load_geometry(name)
    return builtin_geometry(name)


def _study_mapped(cfg):
    d = cfg.d
    geom = _load_geometry(cfg)
    f_phys = fn.target_function(cfg.target, d)
    pull = PullbackFunction(f_phys, geom)
    rows = []
    for p in cfg.p:
        tasks = []
        for n in cfg.n:
            def t(p=p, n=n):
                rule = LevelRule(d, n, p)
                sg = combination_project(pull, rule, r=0)
                err = pullback_error_norm(f_phys, sg, geom, "semi", 0)
                return [Row(cfg.kind, d, p, n, value=err, source="T1")]
            tasks.append(t)
        prows = _run_tasks(tasks, cfg.timing)
        rows.extend(prows)
        pairs = sorted(((2.0 ** -row.n, row.value) for row in prows), reverse=True)
        order = fit_rate(pairs, log_power=d - 1)
        min_order = cfg.min_order or (p + 1 - 0.2)
        rows.append(Row(cfg.kind, d, p, "", level="fit", value=order,
                        bound=min_order, passed=order >= min_order, source="T1"))
    return rows


def _study_equivalence(cfg):
    d = cfg.d
    tasks = []
    for p in cfg.p:
        for n in cfg.n:
            if n < lambda_eff(p):
                continue
            def t(p=p, n=n):
                rule = LevelRule(d, n, p)
                rep = equivalence_report(rule)
                formula = sparse_dimension(d, n, p)[0]
                dims_ok = rep["dim_L"] == rep["dim_H"] == formula
                res = rep["cross_residual_max"]
                return [
                    Row(cfg.kind, d, p, n, level="dims",
                        value=rep["dim_L"], bound=rep["dim_H"],
                        passed=dims_ok, source="T2"),
                    Row(cfg.kind, d, p, n, level="residual", value=res,
                        bound=1e-9, ratio=res / 1e-9, passed=res < 1e-9,
                        source="T2"),
                ]
            tasks.append(t)
    return _run_tasks(tasks, cfg.timing)


def _study_inverse(cfg):
    d = cfg.d
    rows = []
    if cfg.variant == "univariate":
        tasks = []
        for p in cfg.p:
            for q in cfg.q:
                for lev in cfg.n:
                    def t(p=p, q=q, lev=lev):
                        space = make_space(p, lev)
                        sub = vanishing_subspace(space, q)
                        A = sub.basis.T @ gram_matrix(space, q) @ sub.basis
                        B = sub.basis.T @ gram_matrix(space, 0) @ sub.basis
                        lam = scipy.linalg.eigh(A, B, eigvals_only=True)[-1]
                        val = float(np.sqrt(lam))
                        bound = theory.c2(q) * 2.0 ** (q * lev)
                        return [Row(cfg.kind, 1, p, lev, r="", q=q, value=val,
                                    bound=bound, ratio=val / bound,
                                    passed=val <= bound, source="L12")]
                    tasks.append(t)
        rows = _run_tasks(tasks, cfg.timing)
    elif cfg.variant == "sparse":
        tasks = []
        for p in cfg.p:
            for q in cfg.q:
                for n in cfg.n:
                    def t(p=p, q=q, n=n):
                        rule = LevelRule(d, n, p)
                        val = sparse_rayleigh(rule, q, "mix")
                        h = 2.0 ** -n
                        bound = (theory.c11(d, q) * h ** -q
                                 * abs(np.log(h)) ** (d / 2))
                        return [Row(cfg.kind, d, p, n, q=q, value=val,
                                    bound=bound, ratio=val / bound,
                                    passed=val <= bound, source="L10")]
                    tasks.append(t)
        rows = _run_tasks(tasks, cfg.timing)
    else:  # mapped
        geom = _load_geometry(cfg)
        for p in cfg.p:
            for q in cfg.q:
                tasks = []
                for n in cfg.n:
                    def t(p=p, q=q, n=n):
                        val = mapped_rayleigh(LevelRule(d, n, p), q, geom)
                        return [Row(cfg.kind, d, p, n, q=q, value=val,
                                    source="T3")]
                    tasks.append(t)
                prows = _run_tasks(tasks, cfg.timing)
                rows.extend(prows)
                # growth no faster than h^-q |log h|^{d/2}: the fitted exponent
                # of the quotients against that envelope stays at most one
                hs = np.array([2.0 ** -row.n for row in prows])
                envelope = hs ** -float(q) * np.abs(np.log(hs)) ** (d / 2)
                vals = np.array([row.value for row in prows])
                slope = float(np.polyfit(np.log(envelope), np.log(vals), 1)[0])
                rows.append(Row(cfg.kind, d, p, "", level="fit", q=q,
                                value=slope, bound=1.05, passed=slope <= 1.05,
                                source="T3"))
    return rows


_RUNNERS = {
    "identities": _study_identities,
    "dimensions": _study_dimensions,
    "univariate-convergence": _study_univariate,
    "sparse-convergence": _study_sparse,
    "mapped-convergence": _study_mapped,
    "equivalence": _study_equivalence,
    "inverse-inequality": _study_inverse,
}


def run_study(cfg):
    """Execute a study and return its report; deterministic given the config
    (the seed enters only studies with random draws)."""
    validate_config(cfg)
    rows = _RUNNERS[cfg.kind](cfg)
    report = StudyReport(cfg, _sorted_rows(rows))
    if cfg.out:
        report.to_csv(cfg.out)
    return report
