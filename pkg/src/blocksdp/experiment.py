"""Simulation grids: config parsing, graph generation, method runs and the
result CSV."""
from __future__ import annotations

import csv
import dataclasses
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from . import baselines, estimators, metrics, model, objective, solver
from .scheme import community_scheme, overlapping_scheme

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "GraphSample",
    "ResultRow",
    "parse_config",
    "load_config",
    "replication_seeds",
    "generate_sample",
    "run_replication",
    "run_experiment",
    "COLUMNS",
]

MODELS = ("community", "overlapping", "latent")
METHODS = ("sdp_map", "sdp_randomized", "spectral_A", "usvt")
COLUMNS = ("model", "n", "K", "avg_degree", "seed", "method", "metric_name", "value", "wall_ms")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation grid.

    ``gamma0``/``gamma1``, when both given, only fix the within/between
    ratio; the scale is always solved from the target degree.  ``sigma``
    for the latent model is solved from the degree unless given.
    ``theta_hat = community`` (overlapping model only) fits a community
    shaped B-hat instead of the generative one; ``bhat_ratio`` changes the
    ratio used by the fitted B-hat.
    """

    model: str
    n: tuple
    degree: tuple
    K: int | None = None
    k: int = 2
    d: int = 2
    sigma: float | None = None
    gamma0: float | None = None
    gamma1: float | None = None
    ratio: float = 10.0
    balanced: bool = True
    radius: float = 0.5
    replications: int = 1
    seed: int = 0
    methods: tuple = ("sdp_map", "spectral_A")
    theta_hat: str = "true"
    bhat_ratio: float | None = None
    max_iter: int = 2000
    penalty_scale: float = 10.0
    tol: float = 1e-5
    mode: str = "auto"
    usvt_c: float = baselines.USVT_C
    timing: bool = False

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}")
        if not self.n or not self.degree or not self.methods:
            raise ConfigError("n, degree and methods must be nonempty")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods {sorted(bad)}")
        if self.model == "community" and not self.K:
            raise ConfigError("community model needs K")
        if self.mode not in ("auto", "dense", "structured"):
            raise ConfigError("mode must be auto, dense or structured")
        if self.theta_hat not in ("true", "community"):
            raise ConfigError("theta_hat must be 'true' or 'community'")
        if (self.gamma0 is None) != (self.gamma1 is None):
            raise ConfigError("give both gamma0 and gamma1 or neither")
        if self.gamma0 is not None and not self.gamma0 > self.gamma1 > 0:
            raise ConfigError("need gamma0 > gamma1 > 0")

    @property
    def classes(self) -> int:
        if self.model == "community":
            return self.K
        if self.model == "overlapping":
            return self.k ** 2
        return (2 * self.k) ** self.d

    @property
    def within_ratio(self) -> float:
        return self.gamma0 / self.gamma1 if self.gamma0 is not None else self.ratio

    def solver_config(self, seed: int = 0) -> solver.SolverConfig:
        return solver.SolverConfig(max_iter=self.max_iter, penalty_scale=self.penalty_scale,
                                   tol_primal=self.tol, tol_dual=self.tol, mode=self.mode,
                                   seed=seed)


_INT = {"K", "k", "d", "replications", "seed", "max_iter"}
_FLOAT = {"sigma", "gamma0", "gamma1", "ratio", "radius", "bhat_ratio", "penalty_scale",
          "tol", "usvt_c"}
_BOOL = {"balanced", "timing"}
_STR = {"model", "theta_hat", "mode"}
_LISTS = {"n": int, "degree": float, "methods": str}
_ALIASES = {"degrees": "degree", "avg_degree": "degree", "reps": "replications",
            "seeds": "seed", "ns": "n"}


def _to_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines.  ``#`` starts a comment; lists use commas."""
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        try:
            if key in _LISTS:
                kw[key] = tuple(_LISTS[key](v.strip()) for v in value.split(",") if v.strip())
            elif key in _INT:
                kw[key] = int(value)
            elif key in _FLOAT:
                kw[key] = float(value)
            elif key in _BOOL:
                kw[key] = _to_bool(value)
            elif key in _STR:
                kw[key] = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    if "model" not in kw:
        raise ConfigError("missing 'model'")
    for key in ("n", "degree"):
        if key not in kw:
            raise ConfigError(f"missing {key!r}")
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


@dataclass(frozen=True)
class ResultRow:
    model: str
    n: int
    K: int
    avg_degree: float
    seed: int
    method: str
    metric_name: str
    value: float
    wall_ms: float | None = None

    def as_list(self):
        wall = "" if self.wall_ms is None else f"{self.wall_ms:.3f}"
        return [self.model, self.n, self.K, repr(float(self.avg_degree)), self.seed,
                self.method, self.metric_name, repr(float(self.value)), wall]


@dataclass(eq=False)
class GraphSample:
    """A generated graph with its ground truth and the fitted theta-hat."""

    A: np.ndarray
    P: np.ndarray
    theta_hat: objective.ThetaHat
    z: np.ndarray | None = None
    theta: np.ndarray | None = None
    coords: np.ndarray | None = None
    sigma: float | None = None
    meta: dict = field(default_factory=dict)


def replication_seeds(base: int, n: int, degree: float, rep: int) -> np.ndarray:
    """Four independent 32-bit seeds for one replication: labels/coords,
    edges, clustering and randomized rounding."""
    key = [int(base), int(n), int(round(degree * 1_000_000)), int(rep)]
    return np.random.SeedSequence(key).generate_state(4)


def solve_sigma(coords, degree: float) -> float:
    """Bandwidth giving expected average degree ``degree`` for fixed coordinates."""
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0]
    dist = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1))
    off = ~np.eye(n, dtype=bool)
    dist = dist[off]

    def gap(log_sigma):
        return np.sum(expit(-dist / np.exp(log_sigma))) / n - degree

    if not 0 < degree < 0.5 * (n - 1):
        raise ConfigError("latent degree must lie in (0, (n-1)/2)")
    return float(np.exp(brentq(gap, -12.0, 12.0, xtol=1e-12)))


def _community_shape(K: int, ratio: float) -> np.ndarray:
    return ratio * np.eye(K) + (1 - np.eye(K))


def _fitted(theta, A, pi, shape=None):
    """Rescale ``shape`` (default: theta) so its density matches A's."""
    B = theta if shape is None else shape
    return B * model.empirical_density(A) / (pi @ B @ pi)


def generate_sample(cfg: ExperimentConfig, n: int, degree: float, rep: int) -> GraphSample:
    s_labels, s_edges, _, _ = replication_seeds(cfg.seed, n, degree, rep)
    K = cfg.classes
    if cfg.model == "latent":
        coords = model.circle_coords(n, s_labels, radius=cfg.radius)
        sigma = cfg.sigma if cfg.sigma is not None else solve_sigma(coords, degree)
        P = model.latent_probability_matrix(coords, sigma)
        A = model.sample_adjacency(P, s_edges)
        th = estimators.latent_theta(cfg.k, cfg.d, sigma)
        return GraphSample(A, P, th, coords=coords, sigma=sigma)

    pi = model.class_weights(K, cfg.balanced)
    ratio = cfg.within_ratio
    if cfg.model == "community":
        theta = model.community_theta(K, pi, degree, n, ratio)
        basis = community_scheme(K)
    else:
        theta = model.overlapping_theta(cfg.k, pi, degree, n, ratio)
        basis = overlapping_scheme(cfg.k)
    z = model.sample_labels(pi, n, s_labels)
    P = model.block_probability_matrix(theta, z)
    A = model.sample_adjacency(P, s_edges)

    fit_ratio = cfg.bhat_ratio if cfg.bhat_ratio is not None else ratio
    if cfg.theta_hat == "community":
        shape, basis = _community_shape(K, fit_ratio), community_scheme(K)
    elif cfg.bhat_ratio is not None:
        shape = (model.community_theta(K, pi, degree, n, fit_ratio) if cfg.model == "community"
                 else model.overlapping_theta(cfg.k, pi, degree, n, fit_ratio))
    else:
        shape = None
    th = objective.make_theta_hat(_fitted(theta, A, pi, shape), basis)
    return GraphSample(A, P, th, z=z, theta=theta)


def _communities_from_labels(A, zhat, K, th):
    theta_est = estimators.estimate_theta(A, zhat, K)
    G = estimators.threshold_graph(theta_est, th.values.max(), th.values.min())
    return estimators.overlapping_communities(zhat, estimators.maximal_cliques(G))


def _label_metrics(cfg, sample, zhat, A):
    out = [("misclassification", metrics.misclassification(zhat, sample.z))]
    if cfg.model == "overlapping":
        Chat = _communities_from_labels(A, zhat, cfg.classes, sample.theta_hat)
        C = estimators.true_overlapping_communities(sample.z, cfg.k)
        out.append(("community_set_error", metrics.community_set_error(Chat, C)))
    return out


def run_replication(cfg: ExperimentConfig, n: int, degree: float, rep: int) -> list[ResultRow]:
    """Generate one graph and evaluate every configured method on it."""
    _, _, s_cluster, s_round = replication_seeds(cfg.seed, n, degree, rep)
    sample = generate_sample(cfg, n, degree, rep)
    A, th, K = sample.A, sample.theta_hat, cfg.classes
    rows = []

    def emit(method, results, wall):
        for name, value in results:
            rows.append(ResultRow(cfg.model, n, K, degree, rep, method, name, value,
                                  wall if cfg.timing else None))

    sdp_methods = [m for m in cfg.methods if m.startswith("sdp")]
    if sdp_methods:
        t0 = time.perf_counter()
        try:
            F = objective.build_objective_span(A, th) if th.basis is not None \
                else objective.build_objective(A, th)
            sol = solver.solve(F, cfg.solver_config(int(s_cluster)))
        except solver.SolverDivergence:
            sol = None
        solve_ms = 1e3 * (time.perf_counter() - t0)
        for method in sdp_methods:
            if sol is None:
                emit(method, [("failed", 1.0)], solve_ms)
                continue
            t1 = time.perf_counter()
            randomized = method == "sdp_randomized"
            if cfg.model == "latent":
                grid = estimators.toric_grid(cfg.k, cfg.d)
                D = (estimators.randomized_estimate_D(sol.X, grid, int(s_round)) if randomized
                     else estimators.map_estimate_D(sol.X, grid))
                yhat = estimators.embed_coordinates(D, sample.coords.shape[1])
                res = [("aligned_rms", metrics.aligned_rms(yhat, sample.coords))]
            else:
                Pe = (estimators.randomized_estimate_P(sol.X, th, int(s_round)) if randomized
                      else estimators.map_estimate_P(sol.X, th))
                zhat = estimators.round_labels(Pe, sol.X, th, seed=int(s_cluster))
                res = _label_metrics(cfg, sample, zhat, A)
            emit(method, res, solve_ms + 1e3 * (time.perf_counter() - t1))

    for method in cfg.methods:
        if method.startswith("sdp"):
            continue
        t0 = time.perf_counter()
        if cfg.model == "latent":
            if method == "usvt":
                yhat = baselines.usvt_latent(A, sample.sigma, sample.coords.shape[1], cfg.usvt_c)
                res = [("aligned_rms", metrics.aligned_rms(yhat, sample.coords))]
            else:
                continue
        else:
            if method == "spectral_A":
                zhat = baselines.spectral_cluster_adjacency(A, K, seed=int(s_cluster))
            else:
                zhat = estimators.spectral_cluster(baselines.usvt_estimate(A, cfg.usvt_c), K,
                                                   seed=int(s_cluster))
            res = _label_metrics(cfg, sample, zhat, A)
        emit(method, res, 1e3 * (time.perf_counter() - t0))
    return rows


def _task(args):
    cfg, n, degree, rep = args
    return run_replication(cfg, n, degree, rep)


def _rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, out, threads: int = 1, progress=None) -> Path:
    """Run the full grid and write the result CSV to ``out``.

    Rows come out in grid order (n, degree, replication, method) whatever
    the number of worker processes, so equal configs give equal bytes.
    """
    tasks = [(cfg, n, deg, rep) for n in cfg.n for deg in cfg.degree
             for rep in range(cfg.replications)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        chunks = []
        for t in tasks:
            chunks.append(_task(t))
            if progress is not None:
                progress(len(chunks), len(tasks))
    rows = [r for chunk in chunks for r in chunk]
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(_rows_to_csv(rows))
    return out


def config_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)
