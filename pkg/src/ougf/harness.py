"""Experiment configuration, orchestration and reports.

An experiment is described by a TOML file::

    kind = "moment"
    seed = 20240611
    reps = 10000
    times = [1.0]
    q = [2.0]

    [model]
    family = "atom_list"
    sigma = 0.0
    drift = 0.0
    theta = 1.0
    atoms = [{rate = 1.0, partition = [0.5, 0.5]}]

Every precondition of the formulas involved is checked before anything is
simulated, and the report rows compare each Monte Carlo estimate with its
closed-form target.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dislocation as dl
from . import gf_sim as gs
from . import levy_ou as lo
from . import rrt
from .numerics import EULER_GAMMA, QuadratureSettings, derive_stream, integrate_exponential_scale

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("moment", "martingale", "many_to_one", "lln", "generator_residual", "truncation",
         "rrt", "cell_vs_atom", "ou_laplace")
COLUMNS = ("experiment", "statistic", "t", "q", "estimate", "stderr", "target", "zscore",
           "reps", "aborted")


class ConfigError(ValueError):
    """The configuration is malformed or violates a precondition.

    ``violations`` lists every problem found.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: dict
    level: float = math.inf
    times: tuple = (1.0,)
    q: tuple = (2.0,)
    reps: int = 1000
    seed: int = 0
    workers: int | None = None
    eps: float | None = None
    options: dict = field(default_factory=dict)
    quadrature: QuadratureSettings = QuadratureSettings()
    caps: gs.Caps = gs.Caps()

    def canonical(self) -> str:
        d = asdict(self)
        d.pop("workers")
        return json.dumps(d, sort_keys=True, default=repr)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    statistic: str
    t: float
    q: float
    estimate: float
    stderr: float
    target: float
    zscore: float
    reps: int
    aborted: int


@dataclass
class ExperimentReport:
    experiment: str
    rows: list
    metadata: dict = field(default_factory=dict)

    def __eq__(self, other):
        return (isinstance(other, ExperimentReport) and self.experiment == other.experiment
                and self.metadata == other.metadata
                and [_row_key(r) for r in self.rows] == [_row_key(r) for r in other.rows])


def _row_key(r):
    return tuple(repr(v) for v in asdict(r).values())


# -- config parsing ------------------------------------------------------------

def parse_config(data: dict) -> ExperimentConfig:
    problems = []
    kind = data.get("kind")
    if kind not in KINDS:
        problems.append(f"kind must be one of {', '.join(KINDS)}; got {kind!r}")
    model = data.get("model")
    if not isinstance(model, dict):
        problems.append("a [model] table is required")
        model = {}
    q = data.get("q", [2.0])
    times = data.get("times", [1.0])
    qs = tuple(float(x) for x in (q if isinstance(q, list) else [q]))
    ts = tuple(float(x) for x in (times if isinstance(times, list) else [times]))
    quad = data.get("quadrature", {})
    caps = data.get("caps", {})
    try:
        qset = QuadratureSettings(float(quad.get("abs_tol", 1e-12)), float(quad.get("rel_tol", 1e-10)),
                                  int(quad.get("max_subdivisions", 2000)))
    except ValueError as exc:
        problems.append(str(exc))
        qset = QuadratureSettings()
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        kind=kind,
        model=dict(model),
        level=float(data.get("level", math.inf)),
        times=ts,
        q=qs,
        reps=int(data.get("reps", 1000)),
        seed=int(data.get("seed", 0)),
        workers=data.get("workers"),
        eps=data.get("eps"),
        options=dict(data.get("options", {})),
        quadrature=qset,
        caps=gs.Caps(int(caps.get("max_particles", 10 ** 6)), int(caps.get("max_events", 10 ** 8))),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        return parse_config(tomllib.load(fh))


def with_overrides(config: ExperimentConfig, seed=None, workers=None, env=None) -> ExperimentConfig:
    """Apply seed and thread overrides: explicit arguments, then ``OUGF_SEED``
    and ``OUGF_THREADS`` from the environment."""
    env = os.environ if env is None else env
    kw = {}
    if seed is not None:
        kw["seed"] = int(seed)
    elif env.get("OUGF_SEED"):
        kw["seed"] = int(env["OUGF_SEED"])
    if workers is not None:
        kw["workers"] = int(workers)
    elif env.get("OUGF_THREADS"):
        kw["workers"] = int(env["OUGF_THREADS"])
    if not kw:
        return config
    d = {f: getattr(config, f) for f in config.__dataclass_fields__}
    d.update(kw)
    return ExperimentConfig(**d)


# -- models --------------------------------------------------------------------

def _power_mixture(terms):
    """``g(s1) = sum coef s1^a (1 - s1)^b`` written in ``u = 1 - s1``."""
    terms = [(float(t["coef"]), float(t.get("s_power", 0.0)), float(t.get("u_power", 0.0)))
             for t in terms]

    def g(u):
        return sum(c * (1.0 - u) ** a * u ** b for c, a, b in terms)

    tail = max([-b for c, a, b in terms if c != 0] + [0.0])
    return g, tail


def build_gf(model: dict) -> dl.GFCharacteristics:
    """Growth-fragmentation characteristics from a ``[model]`` table."""
    fam = model.get("family", "atom_list")
    theta = float(model.get("theta", 1.0))
    sigma = float(model.get("sigma", 0.0))
    if fam == "atom_list":
        pairs = tuple((float(a["rate"]), tuple(a.get("partition", ()))) for a in model.get("atoms", []))
        return dl.GFCharacteristics(sigma, float(model.get("drift", 0.0)), dl.AtomicDislocation(pairs), theta)
    if fam == "rrt":
        drift = float(model.get("drift", -EULER_GAMMA + 2.0 * math.log(2.0)))
        return dl.GFCharacteristics(sigma, drift, dl.rrt_dislocation(), theta)
    if fam == "binary_density":
        g, tail = _power_mixture(model.get("terms", []))
        nu = dl.BinaryDislocation(g, tail_exponent=tail, name="binary_density")
        return dl.GFCharacteristics(sigma, float(model.get("drift", 0.0)), nu, theta)
    if fam == "levy":
        levy, th = build_levy(model)
        return dl.binary_from_levy(levy, th)
    raise ConfigError([f"unknown model family {fam!r}"])


def build_levy(model: dict) -> tuple[lo.LevyCharacteristics, float]:
    """Levy characteristics and ``theta`` from a ``family = "levy"`` table."""
    if model.get("family") != "levy":
        raise ConfigError(["this experiment needs a model with family = \"levy\""])
    theta = float(model.get("theta", 1.0))
    jumps = None
    if model.get("jumps"):
        jumps = lo.AtomJumps(tuple(float(j["location"]) for j in model["jumps"]),
                             tuple(float(j["rate"]) for j in model["jumps"]))
    elif model.get("jump_density") == "rrt":
        jumps = lo.DensityJumps(lambda y: math.exp(y) / math.expm1(y) ** 2, singularity=2.0,
                                log_moment_finite=True, name="rrt")
    levy = lo.LevyCharacteristics(float(model.get("sigma", 0.0)), float(model.get("drift", 0.0)),
                                  jumps, float(model.get("kill_rate", 0.0)))
    return levy, theta


# -- validation ----------------------------------------------------------------

def validate(config: ExperimentConfig) -> list[str]:
    """Every violated precondition, phrased after the condition it mirrors."""
    out = []
    k = config.kind
    if config.reps < 1:
        out.append("reps must be at least 1")
    if any(t < 0 for t in config.times):
        out.append("times must be nonnegative")
    if any(q < 0 for q in config.q):
        out.append("q values must be nonnegative")
    if k in ("ou_laplace", "cell_vs_atom"):
        try:
            levy, th = build_levy(config.model)
        except (ConfigError, ValueError) as exc:
            return out + [str(exc)]
        if k == "cell_vs_atom":
            for q in config.q:
                for t in config.times:
                    if math.isinf(dl.cumulant_from_levy(levy, q * min(1.0, math.exp(-th * t)))):
                        out.append(f"q={q:g}, t={t:g}: q e^(-theta s) not in dom(kappa)")
        return out
    if k == "rrt":
        for q in config.q:
            for t in config.times:
                if not q > math.exp(t):
                    out.append(f"q={q:g}, t={t:g}: the moment formula needs q > e^t")
        for n in config.options.get("n_values", [100000]):
            if int(n) < 1:
                out.append("n must be at least 1")
        return out
    try:
        gf = build_gf(config.model)
    except (ConfigError, ValueError) as exc:
        return out + [str(exc)]
    levels = [config.level] + [float(x) for x in config.options.get("levels", [])]
    for lev in levels:
        if math.isinf(dl.multi_mass(dl.truncate(gf.nu, lev))):
            out.append(f"level={lev:g}: truncated measure has infinite multi-child rate")
    g = gf.truncated(config.level)
    if k in ("moment", "truncation"):
        for q in config.q:
            for t in config.times:
                if not gs.moment_condition(gf, config.level, q, t):
                    out.append(f"q={q:g}, t={t:g}: moment condition q >= alpha (1 v e^(theta t)), "
                               "alpha in dom(kappa), fails")
    if k == "martingale":
        for q in config.q:
            if not dl.in_dom(g, q):
                out.append(f"q={q:g}: q not in dom(kappa)")
        if math.isinf(dl.cumulant(g, 0.0)):
            out.append("kappa(0) = inf: the count martingale needs finitely many fragments")
    if k in ("many_to_one", "generator_residual"):
        if math.isinf(dl.cumulant(g, 0.0)):
            out.append("kappa(0) = inf: the number of fragments is not finite")
    if k == "lln":
        if not gf.theta > 0:
            out.append("theta > 0 is required for the law of large numbers")
        rep = dl.check_lln_conditions(g, float(config.options.get("gamma", 2.0)))
        for c in rep.conditions:
            if not c.ok:
                if c is rep.supercritical:
                    out.append("kappa(0) <= 0 violates supercriticality")
                else:
                    out.append(f"LLN condition fails: {c.name}")
    return out


# -- statistics ----------------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    zscore: float
    passed: bool


def compare_stats(estimate: float, stderr: float, target: float, threshold: float = 3.0) -> Comparison:
    """z-score of ``estimate`` against ``target``; with ``stderr = 0`` the two
    must agree within ``1e-12``."""
    if stderr < 0:
        raise ValueError("stderr must be nonnegative")
    diff = estimate - target
    if stderr == 0:
        ok = abs(diff) <= 1e-12
        return Comparison(0.0 if ok else math.copysign(math.inf, diff), ok)
    z = diff / stderr
    return Comparison(z, abs(z) < threshold)


def _row(cfg, stat, t, q, est, se, target, n, aborted=0) -> ReportRow:
    z = compare_stats(est, se, target).zscore if math.isfinite(est) and math.isfinite(target) else math.nan
    return ReportRow(cfg.kind, stat, float(t), float(q), float(est), float(se), float(target), float(z),
                     int(n), int(aborted))


def _mc_row(cfg, stat, t, q, values, target, aborted=0):
    e = gs.MCEstimate.from_values(values)
    return _row(cfg, stat, t, q, e.estimate, e.stderr, target, e.n, aborted)


# -- experiments ---------------------------------------------------------------

def _simulate_many(cfg, gf, level, seed, label="rep"):
    """Runs at all requested times; ``None`` marks an aborted run."""
    def body(s):
        run = gs.simulate(gf, level, cfg.times, s, cfg.caps, eps=cfg.eps)
        return None if run.aborted else run
    return gs.run_replications(body, seed, cfg.reps, cfg.workers, label)


def _exp_moment(cfg, gf):
    runs = _simulate_many(cfg, gf, cfg.level, cfg.seed)
    ok = [r for r in runs if r is not None]
    rows = []
    for q in cfg.q:
        for i, t in enumerate(cfg.times):
            vals = [gs.lq_statistic(r.snapshot(t), q) for r in ok]
            rows.append(_mc_row(cfg, "moment", t, q, vals, gs.moment_target(gf, cfg.level, q, t),
                                len(runs) - len(ok)))
    return rows


def _exp_martingale(cfg, gf):
    runs = _simulate_many(cfg, gf, cfg.level, cfg.seed)
    ok = [r for r in runs if r is not None]
    ab = len(runs) - len(ok)
    rows = []
    for q in cfg.q:
        vals = np.array([gs.additive_martingale(r, q, cfg.times) for r in ok])
        for i, t in enumerate(cfg.times):
            rows.append(_mc_row(cfg, "additive_martingale", t, q, vals[:, i], 1.0, ab))
    vals = np.array([gs.count_martingale(r, cfg.times) for r in ok])
    for i, t in enumerate(cfg.times):
        rows.append(_mc_row(cfg, "count_martingale", t, 0.0, vals[:, i], 1.0, ab))
    return rows


def _exp_many_to_one(cfg, gf):
    rows = []
    for t in cfg.times:
        for q in cfg.q:
            m = gs.many_to_one_compare(gf, q, t, cfg.reps, cfg.seed, level=cfg.level, eps=cfg.eps,
                                       caps=cfg.caps, workers=cfg.workers)
            rows.append(ReportRow(cfg.kind, "many_to_one", t, q, m.lhs, math.hypot(m.lhs_se, m.rhs_se),
                                  m.rhs, m.zscore, cfg.reps, 0))
    return rows


def _exp_lln(cfg, gf):
    runs = _simulate_many(cfg, gf, cfg.level, cfg.seed)
    ok = [r for r in runs if r is not None]
    rows = []
    g = gf.truncated(cfg.level)
    for q in cfg.q:
        target = dl.stationary_gf_moment(g, q, cfg.quadrature)
        for i, t in enumerate(cfg.times):
            vals = [gs.empirical_average(r.snapshot(t), lambda x: x ** q)
                    for r in ok if r.snapshot(t).count > 0]
            rows.append(_mc_row(cfg, "empirical_average", t, q, vals, target, len(runs) - len(ok)))
    return rows


def log_square_test_function():
    """``f(x) = exp(-(log x)^2)`` with its first two derivatives."""
    def f(x):
        return np.exp(-np.log(x) ** 2)

    def df(x):
        lx = np.log(x)
        return -2.0 * lx * np.exp(-lx ** 2) / x

    def d2f(x):
        lx = np.log(x)
        return -2.0 * np.exp(-lx ** 2) * (1.0 - lx - 2.0 * lx ** 2) / x ** 2

    return f, df, d2f


def generator_residuals(gf, t0, hs, reps, seed, *, level=math.inf, caps=None, eps=None, workers=1):
    """Paired Monte Carlo residuals ``(E<X(t0+h),f> - E<X(t0),f>)/h - E<X(t0),Lf>``.

    All step sizes use the same runs, so the difference of residuals has a
    much smaller standard error than each residual alone. Returns
    ``{h: MCEstimate}`` and the paired values as an array ``(reps, len(hs))``.
    """
    f, df, d2f = log_square_test_function()
    times = [t0] + [t0 + h for h in hs]
    g = gf.truncated(level)

    def lf(x):
        return dl.generator_apply(g, f, df, d2f, x)

    def body(s):
        run = gs.simulate(gf, level, times, s, caps, eps=eps)
        if run.aborted:
            return None
        base = run.snapshot(t0)
        f0 = float(np.sum(f(base.sizes)))
        l0 = float(sum(lf(x) for x in base.sizes))
        return [(float(np.sum(f(run.snapshot(t0 + h).sizes))) - f0) / h - l0 for h in hs]

    out = [v for v in gs.run_replications(body, seed, reps, workers) if v is not None]
    arr = np.array(out)
    return {h: gs.MCEstimate.from_values(arr[:, j]) for j, h in enumerate(hs)}, arr


def _exp_generator_residual(cfg, gf):
    t0 = float(cfg.options.get("t0", cfg.times[0]))
    hs = [float(h) for h in cfg.options.get("h", [0.1, 0.05])]
    res, arr = generator_residuals(gf, t0, hs, cfg.reps, cfg.seed, level=cfg.level, caps=cfg.caps,
                                   eps=cfg.eps, workers=cfg.workers)
    rows = [_row(cfg, f"generator_residual[h={h:g}]", t0, math.nan, e.estimate, e.stderr, 0.0, e.n)
            for h, e in res.items()]
    for j in range(1, len(hs)):
        ratio = hs[j] / hs[j - 1]
        rows.append(_mc_row(cfg, f"residual_scaling[h={hs[j]:g}]", t0, math.nan,
                            arr[:, j] - ratio * arr[:, j - 1], 0.0))
    return rows


def _exp_truncation(cfg, gf):
    levels = [float(x) for x in cfg.options.get("levels", [])]
    runs = _simulate_many(cfg, gf, cfg.level, cfg.seed)
    ok = [r for r in runs if r is not None]
    rows = []
    for lev in levels:
        cut_runs = [gs.cut(r, lev) for r in ok]
        direct = [r for r in _simulate_many(cfg, gf, lev, cfg.seed, label=f"direct-{lev!r}") if r is not None]
        for q in cfg.q:
            for i, t in enumerate(cfg.times):
                target = gs.moment_target(gf, lev, q, t)
                rows.append(_mc_row(cfg, f"cut_moment[level={lev:g}]", t, q,
                                    [gs.lq_statistic(r.snapshot(t), q) for r in cut_runs], target))
                rows.append(_mc_row(cfg, f"direct_moment[level={lev:g}]", t, q,
                                    [gs.lq_statistic(r.snapshot(t), q) for r in direct], target))
    return rows


def rrt_replications(n_values, times, q_values, reps, seed, workers=1):
    """``sum w_i^q`` for nested trees: smaller ``n`` reuse the first vertices and
    clocks of the largest tree. Shape ``(reps, len(n_values), len(times), len(q_values))``."""
    n_values = [int(n) for n in n_values]
    nmax = max(n_values)

    def body(s):
        st = derive_stream(s)
        tree = rrt.build_tree(nmax, st.child("tree"))
        sched = rrt.destruction_schedule(nmax, st.child("clock"))
        out = np.empty((len(n_values), len(times), len(q_values)))
        for a, n in enumerate(n_values):
            sub, sch = tree.restrict(n), sched.restrict(n)
            for b, t in enumerate(times):
                w = rrt.cluster_weights(rrt.destroy_at(sub, sch, t), n, t)
                for c, q in enumerate(q_values):
                    out[a, b, c] = float(np.sum(w ** q))
        return out

    return np.array(gs.run_replications(body, seed, reps, workers))


def _exp_rrt(cfg, gf=None):
    n_values = [int(n) for n in cfg.options.get("n_values", [100000])]
    arr = rrt_replications(n_values, cfg.times, cfg.q, cfg.reps, cfg.seed, cfg.workers)
    rows = []
    for a, n in enumerate(n_values):
        for b, t in enumerate(cfg.times):
            for c, q in enumerate(cfg.q):
                rows.append(_mc_row(cfg, f"rrt_moment[n={n}]", t, q, arr[:, a, b, c], rrt.rrt_moment(q, t)))
    return rows


def _exp_cell_vs_atom(cfg, gf=None):
    levy, theta = build_levy(cfg.model)
    gfb = dl.binary_from_levy(levy, theta)

    def cells(s):
        run = gs.cell_system_simulate(levy, theta, None, cfg.times, s, cfg.caps, level=cfg.level, eps=cfg.eps)
        return None if run.aborted else run

    cell_runs = gs.run_replications(cells, cfg.seed, cfg.reps, cfg.workers, label="cell")
    atom_runs = _simulate_many(cfg, gfb, cfg.level, cfg.seed, label="atom")
    rows = []
    for q in cfg.q:
        for i, t in enumerate(cfg.times):
            target = math.exp(integrate_exponential_scale(
                lambda x: dl.cumulant_from_levy(levy, x), q, theta, t))
            for name, runs in (("cell_moment", cell_runs), ("atom_moment", atom_runs)):
                ok = [r for r in runs if r is not None]
                rows.append(_mc_row(cfg, name, t, q, [gs.lq_statistic(r.snapshot(t), q) for r in ok],
                                    target, len(runs) - len(ok)))
    return rows


def _exp_ou_laplace(cfg, gf=None):
    levy, theta = build_levy(cfg.model)
    params = lo.OUParams(levy, theta)
    z0 = float(cfg.options.get("z0", 0.0))
    horizon = max(cfg.times)

    def body(s):
        path = lo.simulate_ou(params, z0, horizon, derive_stream(s), times=cfg.times, eps=cfg.eps)
        return [path(t) for t in cfg.times]

    z = np.array(gs.run_replications(body, cfg.seed, cfg.reps, cfg.workers))
    rows = []
    for q in cfg.q:
        for i, t in enumerate(cfg.times):
            vals = np.where(np.isneginf(z[:, i]), 0.0, np.exp(q * np.where(np.isneginf(z[:, i]), 0.0, z[:, i])))
            rows.append(_mc_row(cfg, "ou_laplace", t, q, vals,
                                lo.ou_laplace_transform(params, z0, q, t, cfg.quadrature)))
    return rows


_DISPATCH = {
    "moment": _exp_moment,
    "martingale": _exp_martingale,
    "many_to_one": _exp_many_to_one,
    "lln": _exp_lln,
    "generator_residual": _exp_generator_residual,
    "truncation": _exp_truncation,
    "rrt": _exp_rrt,
    "cell_vs_atom": _exp_cell_vs_atom,
    "ou_laplace": _exp_ou_laplace,
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Validate ``config`` and run it; deterministic given the config and seed."""
    problems = validate(config)
    if problems:
        raise ConfigError(problems)
    start = time.perf_counter()
    gf = None if config.kind in ("rrt", "cell_vs_atom", "ou_laplace") else build_gf(config.model)
    rows = _DISPATCH[config.kind](config, gf)
    meta = {
        "kind": config.kind,
        "seed": config.seed,
        "config_hash": config.config_hash,
        "wall_time": round(time.perf_counter() - start, 6),
    }
    return ExperimentReport(config.kind, rows, meta)


# -- report output -------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def report_json(report: ExperimentReport) -> str:
    rows = [{c: getattr(r, c) for c in COLUMNS} for r in report.rows]
    return json.dumps({"experiment": report.experiment, "columns": list(COLUMNS), "rows": rows,
                       "metadata": report.metadata}, indent=1, sort_keys=False) + "\n"


def emit_report(report: ExperimentReport, fmt: str = "csv", path=None) -> str:
    """Write the report as CSV or JSON to ``path`` (``None`` or ``"-"`` for
    stdout) and return the text."""
    if fmt == "csv":
        text = report_csv(report)
    elif fmt == "json":
        text = report_json(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def parse_report_json(text: str) -> ExperimentReport:
    d = json.loads(text)
    rows = [ReportRow(**{c: r[c] for c in COLUMNS}) for r in d["rows"]]
    return ExperimentReport(d["experiment"], rows, d.get("metadata", {}))


def read_report_json(path) -> ExperimentReport:
    with open(path) as fh:
        return parse_report_json(fh.read())


def condition_report(config: ExperimentConfig) -> tuple[str, bool]:
    """Text report of the law-of-large-numbers hypotheses for the model."""
    gf = build_gf(config.model).truncated(config.level)
    gamma = float(config.options.get("gamma", 2.0))
    rep = dl.check_lln_conditions(gf, gamma)
    lines = []
    for c in rep.conditions:
        lines.append(f"{'PASS' if c.ok else 'FAIL'}  {c.name}  value={_fmt(c.value)}")
    th_ok = gf.theta > 0
    lines.append(f"{'PASS' if th_ok else 'FAIL'}  theta > 0  value={_fmt(gf.theta)}")
    return "\n".join(lines) + "\n", rep.all_ok and th_ok
