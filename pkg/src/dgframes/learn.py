"""Compressed learning experiments on synthetic sparse data.

A task plants a k-sparse unit direction and draws k-sparse samples of
norm at most ``R`` labelled by ``sign(w0.x)``.  Sweeps train one SVM in the
data domain and one per sensing operator in the measurement domain, then
compare held-out losses.  The oracle ``w0`` is the planted direction at the
scale minimizing the training regularized loss.  Held-out estimates stand in
for true losses throughout.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations

import numpy as np
from scipy.stats import spearmanr

from .sensing import make_sensing
from .svm import hinge_loss, train_svm
from .validation import check_signed_labels

# Slack constant for L(A w_S) - L(w_S) <= c C R^2 eps_hat, frozen from the
# pre-run of the bundled Gaussian fixture.
THEOREM3_CONSTANT = 0.01


# -- tasks -------------------------------------------------------------------

@dataclass(frozen=True)
class TaskConfig:
    n: int = 256
    k: int = 5
    R: float = 1.0
    M: int = 200
    M_eval: int = 2000
    label_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.M < 1 or self.M_eval < 1:
            raise ValueError("M and M_eval must be positive")
        if self.R <= 0:
            raise ValueError("R must be positive")
        if not 0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must lie in [0, 0.5)")


@dataclass
class SyntheticTask:
    config: TaskConfig
    planted_w: np.ndarray

    @classmethod
    def from_config(cls, config: TaskConfig) -> "SyntheticTask":
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
        w = np.zeros(config.n)
        support = rng.choice(config.n, size=config.k, replace=False)
        values = rng.standard_normal(config.k)
        w[support] = values / np.linalg.norm(values)
        return cls(config, w)

    @property
    def planted_support(self) -> np.ndarray:
        return np.flatnonzero(self.planted_w)

    def sample(self, count: int, rng: np.random.Generator):
        """Draw ``count`` labelled samples.

        Each support holds one planted coordinate plus ``k - 1`` uniform
        others; values are Gaussian, rescaled to norm ``R * U(0.5, 1)``.
        """
        cfg = self.config
        planted = self.planted_support
        X = np.zeros((count, cfg.n))
        for i in range(count):
            anchor = planted[rng.integers(planted.size)]
            rest = rng.choice(cfg.n - 1, size=cfg.k - 1, replace=False)
            rest = rest + (rest >= anchor)
            support = np.concatenate([[anchor], rest])
            values = rng.standard_normal(cfg.k)
            X[i, support] = values * (cfg.R * rng.uniform(0.5, 1.0)
                                      / np.linalg.norm(values))
        y = np.where(X @ self.planted_w >= 0, 1.0, -1.0)
        flips = rng.random(count) < cfg.label_noise
        y[flips] *= -1
        return X, y


@dataclass
class TaskData:
    task: SyntheticTask
    X_train: np.ndarray
    y_train: np.ndarray
    X_eval: np.ndarray
    y_eval: np.ndarray

    @property
    def config(self) -> TaskConfig:
        return self.task.config


def generate_task(config: TaskConfig) -> TaskData:
    task = SyntheticTask.from_config(config)
    train_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    eval_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    X, y = task.sample(config.M, train_rng)
    Xe, ye = task.sample(config.M_eval, eval_rng)
    return TaskData(task, X, y, Xe, ye)


# -- inner-product distortion ---------------------------------------------------

@dataclass
class Lemma10Result:
    lower: float
    measured: float
    upper: float
    satisfied: bool


def _check_norm(x, R, what):
    norm = float(np.linalg.norm(x))
    if norm > R * (1 + 1e-12):
        raise ValueError(f"{what} has norm {norm} > R = {R}")


def lemma10_check(A, x, x2, R: float, epsilon: float) -> Lemma10Result:
    """Bracket ``(Ax).(Ax')`` by ``(1 -/+ eps) x.x' -/+ 2 R^2 eps``."""
    A = np.asarray(A)
    x = np.asarray(x, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x.shape != x2.shape or A.shape[1] != x.shape[0]:
        raise ValueError("dimension mismatch")
    _check_norm(x, R, "x")
    _check_norm(x2, R, "x'")
    ip = float(x @ x2)
    measured = float(np.real(np.vdot(A @ x, A @ x2)))
    lower = (1 - epsilon) * ip - 2 * R ** 2 * epsilon
    upper = (1 + epsilon) * ip + 2 * R ** 2 * epsilon
    return Lemma10Result(lower, measured, upper, lower <= measured <= upper)


@dataclass
class Combination:
    """``sum_i coefs[i] * labels[i] * X[i]`` with nonnegative coefficients."""

    coefs: np.ndarray
    labels: np.ndarray
    X: np.ndarray

    def vector(self) -> np.ndarray:
        return (np.asarray(self.X) * (np.asarray(self.coefs)
                                      * np.asarray(self.labels))[:, None]).sum(0)


@dataclass
class Lemma11Result:
    max_deviation: float
    bound: float
    deviations: np.ndarray = field(repr=False)

    @property
    def holds(self) -> np.ndarray:
        return self.deviations <= self.bound


def lemma11_check(A, combos, C: float, D: float, R: float,
                  epsilon: float) -> Lemma11Result:
    """Deviation ``|b.a - (Ab).(Aa)|`` for each (alpha, beta) combination."""
    A = np.asarray(A)
    devs = []
    for alpha, beta in combos:
        for comb, cap, name in ((alpha, C, "alpha"), (beta, D, "beta")):
            coefs = np.asarray(comb.coefs, dtype=np.float64)
            if (coefs < 0).any():
                raise ValueError(f"{name} coefficients must be nonnegative")
            if coefs.sum() > cap * (1 + 1e-12):
                raise ValueError(f"{name} coefficients sum to {coefs.sum()} "
                                 f"> {cap}")
            check_signed_labels(comb.labels)
        a, b = alpha.vector(), beta.vector()
        devs.append(abs(float(b @ a)
                        - float(np.real(np.vdot(A @ b, A @ a)))))
    devs = np.asarray(devs)
    bound = 3 * C * D * R ** 2 * epsilon
    return Lemma11Result(float(devs.max()) if devs.size else 0.0, bound, devs)


# -- restricted isometry estimates ----------------------------------------------

def _gram_deviation(A, supports: np.ndarray) -> np.ndarray:
    sub = A[:, supports].transpose(1, 0, 2)            # (S, rows, k)
    gram = np.real(np.conj(sub).transpose(0, 2, 1) @ sub)
    eig = np.linalg.eigvalsh(gram)
    return np.abs(eig - 1.0).max(axis=1)


def estimate_rip_delta(A, k: int, mode: str = "sampled", trials: int = 1000,
                       seed: int = 0, ceiling: int = 200_000,
                       supports=None) -> float:
    """Largest ``|eig(A_T^H A_T) - 1|`` over k-column supports ``T``.

    ``exhaustive`` visits every support; ``sampled`` visits ``trials``
    random ones (a lower bound on the RIP constant).  Explicit ``supports``
    (any sizes) override both.
    """
    A = np.asarray(A)
    n = A.shape[1]
    if supports is not None:
        worst = 0.0
        by_size: dict[int, list] = {}
        for s in supports:
            s = np.unique(np.asarray(s, dtype=np.int64))
            by_size.setdefault(s.size, []).append(s)
        for group in by_size.values():
            for chunk in range(0, len(group), 4096):
                dev = _gram_deviation(A, np.array(group[chunk:chunk + 4096]))
                worst = max(worst, float(dev.max()))
        return worst
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    if mode == "exhaustive":
        count = math.comb(n, k)
        if count > ceiling:
            raise ValueError(f"C({n},{k}) = {count} supports exceeds the "
                             f"ceiling of {ceiling}")
        all_supports = np.array(list(combinations(range(n), k)),
                                dtype=np.int64)
        return float(_gram_deviation(A, all_supports).max())
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        sampled = np.array([np.sort(rng.choice(n, size=k, replace=False))
                            for _ in range(trials)])
        return float(_gram_deviation(A, sampled).max())
    raise ValueError(f"unknown mode {mode!r}")


def pair_supports(X1, X2=None, pairs: int | None = None, seed: int = 0):
    """Union supports of sample pairs (all pairs, or ``pairs`` random ones)."""
    X1 = np.asarray(X1)
    X2 = X1 if X2 is None else np.asarray(X2)
    nz1 = [np.flatnonzero(r) for r in X1]
    nz2 = [np.flatnonzero(r) for r in X2]
    if pairs is None:
        idx = [(i, j) for i in range(len(nz1)) for j in range(len(nz2))]
    else:
        rng = np.random.default_rng(seed)
        idx = zip(rng.integers(len(nz1), size=pairs),
                  rng.integers(len(nz2), size=pairs))
    seen = set()
    out = []
    for i, j in idx:
        s = tuple(np.union1d(nz1[i], nz2[j]))
        if s and s not in seen:
            seen.add(s)
            out.append(np.array(s))
    return out


# -- bounds ----------------------------------------------------------------------

def theorem2_bound(w0_norm_sq: float, R: float, epsilon: float, delta: float,
                   M: int) -> float:
    """``sqrt(||w0||^2 (R^2 eps + log(1/delta) / M))`` with unit constant."""
    return math.sqrt(w0_norm_sq * (R ** 2 * epsilon + math.log(1 / delta) / M))


def theorem4_measurement_bound(o: int, r: int, epsilon1: float,
                               C_const: float = 1.0) -> float:
    """``(2^(r+1) C log n / eps1)^2`` with ``n = 2^((r+2) o)``."""
    if o < 1 or o % 2 == 0:
        raise ValueError(f"o must be a positive odd integer, got {o}")
    if not 0 <= r <= (o - 1) // 2:
        raise ValueError(f"r must satisfy 0 <= r <= {(o - 1) // 2}")
    if epsilon1 <= 0 or C_const <= 0:
        raise ValueError("epsilon1 and C must be positive")
    log_n = (r + 2) * o * math.log(2)
    return (2 ** (r + 1) * C_const * log_n / epsilon1) ** 2


def theorem4_gap_bound(R: float, w0_norm: float, r: int, M: int, N: int,
                       m: int, n: int, epsilon1: float,
                       sigma: float = 0.0) -> float:
    """Order term of the deterministic-frame loss gap with unit constant.

    ``sigma`` is an additive term with no closed form here; it is a
    caller-supplied nonnegative input.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    inner = (2 ** r * (math.log(M) + math.log(N)) / math.sqrt(m) + sigma
             + (1 + epsilon1) * math.log(n) / M)
    return R * w0_norm * math.sqrt(inner)


# -- sweeps ----------------------------------------------------------------------

@dataclass
class SweepConfig:
    task: TaskConfig
    sensing: str = "gaussian"
    m_list: tuple[int, ...] = (16, 32, 64, 128, 256)
    C: float = 100.0
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    rip_pairs: int = 2000
    delta_conf: float = 0.05
    slack_constant: float = THEOREM3_CONSTANT
    tol: float = 1e-6
    max_epochs: int = 10_000

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        from .schemas import validate

        validate(doc, "experiment_config")
        task = TaskConfig(**doc["task"])
        sensing = doc["sensing"]
        kw = {k: doc[k] for k in ("C", "rip_pairs", "delta_conf",
                                  "slack_constant", "tol", "max_epochs")
              if k in doc}
        return cls(task=task, sensing=sensing["kind"],
                   m_list=tuple(doc["m_list"]), seeds=tuple(doc["seeds"]), **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sensing"] = {"kind": self.sensing}
        d["m_list"] = list(self.m_list)
        d["seeds"] = list(self.seeds)
        return d


def oracle_scale(direction, X, y, C: float, grid: int = 401) -> float:
    """Scale of ``direction`` minimizing the training regularized loss,
    searched over ``[0, sqrt(2C) / ||direction||]``."""
    direction = np.asarray(direction, dtype=np.float64)
    top = math.sqrt(2 * C) / np.linalg.norm(direction)
    scales = np.linspace(0.0, top, grid)
    marg = y * (X @ direction)
    losses = (np.maximum(0.0, 1.0 - scales[:, None] * marg[None, :]).mean(1)
              + scales ** 2 * float(direction @ direction) / (2 * C))
    return float(scales[np.argmin(losses)])


def _regularized(hinge: float, w, C: float) -> float:
    return hinge + float(np.vdot(w, w).real) / (2 * C)


def _accuracy(w, X, y) -> float:
    return float((np.where(X @ w >= 0, 1, -1) == y).mean())


def _run_seed(cfg: SweepConfig, seed: int) -> list[dict]:
    """All sweep points for one seed; a self-contained, picklable job."""
    task_cfg = replace(cfg.task, seed=seed)
    data = generate_task(task_cfg)
    X, y, Xe, ye = data.X_train, data.y_train, data.X_eval, data.y_eval
    C, R = cfg.C, task_cfg.R
    w0 = data.task.planted_w
    svm_seed, sense_seed, rip_seed = (
        int(s.generate_state(1)[0])
        for s in np.random.SeedSequence([seed, 7]).spawn(3))

    w0 = oracle_scale(w0, X, y, C) * w0
    w_s = train_svm(X, y, C, cfg.tol, cfg.max_epochs, svm_seed).coef_
    h_ws_tr, h_ws = hinge_loss(w_s, X, y), hinge_loss(w_s, Xe, ye)
    h_w0 = hinge_loss(w0, Xe, ye)
    L_ws, L_w0 = _regularized(h_ws, w_s, C), _regularized(h_w0, w0, C)
    supports = pair_supports(X, pairs=cfg.rip_pairs, seed=rip_seed)

    records = []
    for m in cfg.m_list:
        start = time.perf_counter()
        op = make_sensing(cfg.sensing, m, task_cfg.n, sense_seed + m)
        A = op.components_
        AX, AXe = X @ A.T, Xe @ A.T
        model = train_svm(AX, y, C, cfg.tol, cfg.max_epochs, svm_seed)
        z = model.coef_
        Aw = A @ w_s
        h_z_tr, h_z = hinge_loss(z, AX, y), hinge_loss(z, AXe, ye)
        h_aw = hinge_loss(Aw, AXe, ye)
        L_z, L_aw = _regularized(h_z, z, C), _regularized(h_aw, Aw, C)
        eps = estimate_rip_delta(A, 2 * task_cfg.k, supports=supports)
        records.append({
            "seed": seed,
            "m": m,
            "measurement_dim": A.shape[0],
            "epsilon_hat": eps,
            "hinge_train_w_S": h_ws_tr,
            "hinge_train_z_AS": h_z_tr,
            "hinge_eval_w_S": h_ws,
            "hinge_eval_z_AS": h_z,
            "hinge_eval_Aw_S": h_aw,
            "hinge_eval_w0": h_w0,
            "w0_norm": float(np.linalg.norm(w0)),
            "reg_eval_w_S": L_ws,
            "reg_eval_z_AS": L_z,
            "reg_eval_Aw_S": L_aw,
            "reg_eval_w0": L_w0,
            "reg_eval_z_star_proxy": min(L_z, L_aw),
            "acc_train_w_S": _accuracy(w_s, X, y),
            "acc_train_z_AS": _accuracy(z, AX, y),
            "acc_eval_w_S": _accuracy(w_s, Xe, ye),
            "acc_eval_z_AS": _accuracy(z, AXe, ye),
            "hinge_gap": h_z - h_ws,
            "theorem2_gap": h_z - h_w0,
            "theorem2_bound": theorem2_bound(float(w0 @ w0), R, eps,
                                             cfg.delta_conf, task_cfg.M),
            "theorem3_slack": L_aw - L_ws,
            "theorem3_bound": cfg.slack_constant * C * R ** 2 * eps,
            "z_AS_converged": model.converged_,
            "seconds": time.perf_counter() - start,
        })
    return records


CSV_FIELDS = [
    "seed", "m", "measurement_dim", "epsilon_hat",
    "hinge_train_w_S", "hinge_train_z_AS",
    "hinge_eval_w_S", "hinge_eval_z_AS", "hinge_eval_Aw_S", "hinge_eval_w0",
    "w0_norm", "reg_eval_w_S", "reg_eval_z_AS", "reg_eval_Aw_S", "reg_eval_w0",
    "reg_eval_z_star_proxy",
    "acc_train_w_S", "acc_train_z_AS", "acc_eval_w_S", "acc_eval_z_AS",
    "hinge_gap", "theorem2_gap", "theorem2_bound",
    "theorem3_slack", "theorem3_bound", "z_AS_converged",
]


@dataclass
class ExperimentReport:
    config: SweepConfig
    records: list[dict]

    @property
    def m_list(self) -> list[int]:
        return list(self.config.m_list)

    def column(self, name: str, m: int | None = None) -> np.ndarray:
        return np.array([r[name] for r in self.records
                         if m is None or r["m"] == m])

    def summary(self) -> list[dict]:
        out = []
        for m in self.m_list:
            row = {"m": m}
            for name in ("hinge_gap", "hinge_eval_w_S", "hinge_eval_z_AS",
                         "hinge_eval_Aw_S", "hinge_eval_w0", "epsilon_hat",
                         "theorem3_slack", "theorem3_bound", "theorem2_gap",
                         "acc_eval_w_S", "acc_eval_z_AS"):
                vals = self.column(name, m)
                row[f"{name}_mean"] = float(vals.mean())
                row[f"{name}_std"] = float(vals.std())
            out.append(row)
        return out

    def gap_trend(self) -> float:
        """Spearman correlation between m and the mean held-out hinge gap."""
        gaps = [row["hinge_gap_mean"] for row in self.summary()]
        if len(gaps) < 2:
            return float("nan")
        return float(spearmanr(self.m_list, gaps).statistic)

    def chain(self) -> list[dict]:
        """Per point: the ordered losses linking z_AS back to w0."""
        keys = ("reg_eval_z_AS", "reg_eval_z_star_proxy", "reg_eval_Aw_S",
                "reg_eval_w_S", "reg_eval_w0")
        return [{"seed": r["seed"], "m": r["m"],
                 "losses": [r[k] for k in keys],
                 "z_star_proxy_le_z_AS":
                     r["reg_eval_z_star_proxy"] <= r["reg_eval_z_AS"],
                 "z_star_proxy_le_Aw_S":
                     r["reg_eval_z_star_proxy"] <= r["reg_eval_Aw_S"]}
                for r in self.records]

    def to_dict(self, timing: bool = False) -> dict:
        fields = CSV_FIELDS + (["seconds"] if timing else [])
        return {
            "config": self.config.to_dict(),
            "records": [{k: r[k] for k in fields} for r in self.records],
            "summary": self.summary(),
            "gap_spearman": self.gap_trend(),
            "chain": self.chain(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS,
                                extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for r in self.records:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v)
                             for k, v in r.items()})
        return buf.getvalue()

    def plot_tables(self) -> dict[str, str]:
        """Per-figure CSVs: train and held-out accuracy vs measurements."""
        tables = {}
        for split in ("train", "eval"):
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["m", "data_domain_mean", "data_domain_std",
                        "measurement_domain_mean", "measurement_domain_std"])
            for m in self.m_list:
                d = self.column(f"acc_{split}_w_S", m)
                z = self.column(f"acc_{split}_z_AS", m)
                w.writerow([m, repr(float(d.mean())), repr(float(d.std())),
                            repr(float(z.mean())), repr(float(z.std()))])
            tables[f"accuracy_{split}_vs_measurements.csv"] = buf.getvalue()
        return tables


def run_compress_sweep(config: SweepConfig, jobs: int = 1) -> ExperimentReport:
    """Sweep the measurement count; seeds run as independent jobs."""
    if cfg_bad := [m for m in config.m_list if m < 1]:
        raise ValueError(f"invalid measurement counts {cfg_bad}")
    seeds = list(config.seeds)
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(min(jobs, len(seeds))) as pool:
            results = list(pool.map(_run_seed, [config] * len(seeds), seeds))
    else:
        results = [_run_seed(config, s) for s in seeds]
    records = sorted((r for rs in results for r in rs),
                     key=lambda r: (r["m"], r["seed"]))
    return ExperimentReport(config, records)


# -- generalization gap ---------------------------------------------------------------

@dataclass
class SridharanReport:
    gaps: np.ndarray
    threshold: float
    exceedance_fraction: float
    median_gap: float
    M: int

    def to_dict(self) -> dict:
        return {"gaps": [float(g) for g in self.gaps],
                "threshold": self.threshold,
                "exceedance_fraction": self.exceedance_fraction,
                "median_gap": self.median_gap, "M": self.M}


def sridharan_gap_check(config: TaskConfig, C: float, delta_conf: float,
                        repetitions: int, probes=None, c_const: float = 1.0,
                        include_trained: bool = True, seed: int = 0,
                        tol: float = 1e-6) -> SridharanReport:
    """Held-out regularized loss of the trained SVM against the best probe.

    Each repetition draws a fresh training set of size ``config.M`` from the
    same task; the held-out set is shared.  The gap is
    ``L(w_S) - min_probe L(probe)`` and is compared against
    ``c_const * C * log(1/delta_conf) / M``.
    """
    if not 0 < delta_conf < 1:
        raise ValueError("delta_conf must lie in (0, 1)")
    probes = [np.asarray(p, dtype=np.float64) for p in (probes or [])]
    for p in probes:
        if float(p @ p) > 2 * C * (1 + 1e-12):
            raise ValueError(f"probe has ||w||^2 = {float(p @ p)} > 2C")
    if not probes and not include_trained:
        raise ValueError("no classifiers to compare against")
    data = generate_task(config)
    task, Xe, ye = data.task, data.X_eval, data.y_eval
    probe_losses = [_regularized(hinge_loss(p, Xe, ye), p, C) for p in probes]
    gaps = []
    for s in np.random.SeedSequence([config.seed, seed, 11]).spawn(repetitions):
        rng = np.random.default_rng(s)
        X, y = task.sample(config.M, rng)
        w = train_svm(X, y, C, tol, seed=int(s.generate_state(1)[0])).coef_
        L_w = _regularized(hinge_loss(w, Xe, ye), w, C)
        best = min(probe_losses + ([L_w] if include_trained else []))
        gaps.append(L_w - best)
    gaps = np.asarray(gaps)
    threshold = c_const * C * math.log(1 / delta_conf) / config.M
    return SridharanReport(gaps, threshold, float((gaps > threshold).mean()),
                           float(np.median(gaps)), config.M)
