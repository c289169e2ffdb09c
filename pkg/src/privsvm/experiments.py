"""Synthetic generators, the subsample/grid-search protocol, and study drivers.

Two data families are built in: well-separated Gaussian blobs with a few
far-away wrong-label points (where uniform-cost training collapses), and a
five-component Gaussian mixture laid out in a W shape whose exact label
posterior is available in closed form.  ``run_experiment`` wires the
solvers, the weighting schemes and weight learning into one deterministic
evaluation loop; everything is keyed off a single integer seed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, PrivilegedSet
from .kernels import KernelSpec, LINEAR, GAUSSIAN_RBF
from .schemes import nadaraya_watson, probability_weights
from .smooth import PrimalModel
from .svmplus import SvmPlusModel, solve_svmplus
from .weightlearn import WeightLearningConfig, learn_weights
from .wsvm import WsvmModel, solve_wsvm, predict

__all__ = [
    "BlobsSample",
    "WMixture",
    "generate_blobs_with_outliers",
    "generate_w_mixture",
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "run_experiment",
    "emit_results",
    "parse_results",
    "default_log_grid",
    "bandwidth_grid",
    "counterexample_dataset",
    "figure3_study",
    "wshape_study",
    "replicate_svmplus_with_wsvm",
]

METHODS = ("svm", "wsvm-prob", "wsvm-learned", "svmplus", "wsvm-from-svmplus")
DEFAULT_TAU_GRID = (0.0, 0.5, 1.0, 2.0, 4.0)


def default_log_grid(lo_exp: int = -5, hi_exp: int = 15,
                     step_exp: int = 2) -> tuple[float, ...]:
    """Powers of two from 2^lo to 2^hi, multiplicative step 2^step (x4)."""
    return tuple(float(2.0**e) for e in range(lo_exp, hi_exp + 1, step_exp))


def bandwidth_grid(X, quantiles=(0.1, 0.5, 0.9)) -> tuple[float, ...]:
    """Candidate RBF bandwidths: quantiles of the pairwise distances."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < 2:
        return (1.0,)
    sq = (np.sum(X * X, axis=1)[:, None] + np.sum(X * X, axis=1)[None, :]
          - 2.0 * (X @ X.T))
    d = np.sqrt(np.maximum(sq[np.triu_indices(n, k=1)], 0.0))
    vals = tuple(float(max(q, 1e-12)) for q in np.quantile(d, quantiles))
    out = []
    for v in vals:
        if v not in out:
            out.append(v)
    return tuple(out)


# ---------------------------------------------------------------------------
# generators


@dataclass
class BlobsSample:
    data: Dataset
    outlier_mask: np.ndarray  # True on planted wrong-label points
    priv: PrivilegedSet       # 1-D flag feature marking the planted points


def generate_blobs_with_outliers(n_per_class: int = 30,
                                 outlier_count: int = 2,
                                 outlier_distance: float = 100.0,
                                 seed: int = 0,
                                 blob_std: float = 0.4,
                                 blob_offset: float = 1.5) -> BlobsSample:
    """Two Gaussian blobs on the x-axis (centers +-blob_offset, the positive
    class on the right), plus wrong-label points planted the stated distance
    beyond the opposite blob.  Deterministic per seed."""
    if n_per_class < 0 or outlier_count < 0:
        raise ValueError("counts must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    X_pos = rng.normal([blob_offset, 0.0], blob_std, size=(n_per_class, 2))
    X_neg = rng.normal([-blob_offset, 0.0], blob_std, size=(n_per_class, 2))
    parts_X = [X_pos, X_neg]
    parts_y = [np.ones(n_per_class), -np.ones(n_per_class)]
    for k in range(outlier_count):
        lab = 1.0 if k % 2 == 0 else -1.0
        # a positive-labeled outlier sits deep in negative territory
        x = -lab * (blob_offset + outlier_distance)
        jitter = rng.normal(0.0, blob_std, size=2)
        parts_X.append(np.array([[x + jitter[0], jitter[1]]]))
        parts_y.append(np.array([lab]))
    X = np.vstack(parts_X)
    y = np.concatenate(parts_y)
    mask = np.zeros(y.shape[0], dtype=bool)
    mask[2 * n_per_class:] = True
    return BlobsSample(
        data=Dataset(X, y),
        outlier_mask=mask,
        priv=PrivilegedSet(mask.astype(float)[:, None]),
    )


W_CENTERS = np.array(
    [[-2.0, 1.0], [-1.0, -1.0], [0.0, 1.0], [1.0, -1.0], [2.0, 1.0]])
W_LABELS = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
W_STD = 0.5


@dataclass
class WMixture:
    data: Dataset
    eta: np.ndarray  # exact E[y | x] at the sampled points

    @staticmethod
    def exact_eta(points) -> np.ndarray:
        """Closed-form E[y | x] of the five-component mixture."""
        X = np.atleast_2d(np.asarray(points, dtype=float))
        sq = np.sum((X[:, None, :] - W_CENTERS[None, :, :]) ** 2, axis=2)
        sq -= sq.min(axis=1)[:, None]
        dens = np.exp(-sq / (2.0 * W_STD**2))
        return (dens @ W_LABELS) / dens.sum(axis=1)


def generate_w_mixture(n: int, seed: int = 0) -> WMixture:
    """Equal-weight samples from the W-shaped five-Gaussian mixture; labels
    follow each point's component.  Deterministic per seed."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    comp = rng.integers(0, 5, size=n)
    X = W_CENTERS[comp] + rng.normal(0.0, W_STD, size=(n, 2))
    y = W_LABELS[comp]
    data = Dataset(X, y)
    return WMixture(data=data, eta=WMixture.exact_eta(X))


def counterexample_dataset() -> tuple[Dataset, np.ndarray]:
    """The three-point line instance with weights (4, 6, 2) whose optimal
    slacks average higher under the weights than uniformly."""
    X = np.array([[1.0], [2.0], [3.0]])
    y = np.array([1.0, -1.0, 1.0])
    return Dataset(X, y), np.array([4.0, 6.0, 2.0])


# ---------------------------------------------------------------------------
# experiment protocol


@dataclass(frozen=True)
class ExperimentConfig:
    source: str = "blobs"                  # "blobs" | "wmixture"
    methods: tuple[str, ...] = ("svm",)
    subset_sizes: tuple[int, ...] = (40,)
    repetitions: int = 1
    seed: int = 0
    split: str = "1-to-2"                  # "fixed-validation" | "1-to-2" | "2-to-1"
    kernel: str = LINEAR
    n_pool: int = 200
    n_val: int = 200                       # fixed-validation mode only
    n_test: int = 1000
    C_grid: tuple[float, ...] = default_log_grid()
    gamma_grid: tuple[float, ...] = default_log_grid()
    tau_grid: tuple[float, ...] = DEFAULT_TAU_GRID
    delta_grid: tuple[float, ...] = (0.1, 1.0)
    bandwidth_quantiles: tuple[float, ...] = (0.1, 0.5, 0.9)
    max_outer_iter: int = 30
    generator_params: tuple = ()           # key/value overrides for the source

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.split not in ("fixed-validation", "1-to-2", "2-to-1"):
            raise ValueError(f"unknown split mode {self.split!r}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.source not in ("blobs", "wmixture"):
            raise ValueError(f"unknown source {self.source!r}")
        if any(s < 2 for s in self.subset_sizes):
            raise ValueError("subset sizes must be >= 2")
        if any(s > self.n_pool for s in self.subset_sizes):
            raise ValueError("subset sizes must not exceed the pool")


@dataclass(frozen=True)
class ResultRow:
    method: str
    subset: int
    split: str
    mean_error: float
    std: float
    reps: int


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)
    resample_events: int = 0


def emit_results(table: ResultTable, path=None) -> str:
    """CSV with 6-significant-digit decimals; returns the text, optionally
    also writing it to ``path``."""
    buf = io.StringIO()
    buf.write("method,subset,split,mean_error,std,reps\n")
    for r in table.rows:
        buf.write(f"{r.method},{r.subset},{r.split},"
                  f"{r.mean_error:.6g},{r.std:.6g},{r.reps}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def parse_results(text: str) -> ResultTable:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != "method,subset,split,mean_error,std,reps":
        raise ValueError("missing results header")
    rows = []
    for ln in lines[1:]:
        m, s, sp, me, sd, rp = ln.split(",")
        rows.append(ResultRow(m, int(s), sp, float(me), float(sd), int(rp)))
    return ResultTable(rows=rows)


def _generate_pool(config: ExperimentConfig, seed_seq):
    params = dict(config.generator_params)
    seeds = seed_seq.spawn(2)
    s_pool = int(seeds[0].generate_state(1)[0])
    s_test = int(seeds[1].generate_state(1)[0])
    if config.source == "blobs":
        per_class = config.n_pool // 2
        pool = generate_blobs_with_outliers(
            n_per_class=per_class, seed=s_pool, **params)
        test = generate_blobs_with_outliers(
            n_per_class=config.n_test // 2, outlier_count=0, seed=s_test,
            **{k: v for k, v in params.items() if k != "outlier_count"})
        # planted points carry full confidence in the opposite label
        eta = pool.data.y * (1.0 - 2.0 * pool.outlier_mask)
        return pool.data, pool.priv.X, eta, test.data
    mix = generate_w_mixture(config.n_pool, seed=s_pool)
    test = generate_w_mixture(config.n_test, seed=s_test)
    return mix.data, mix.eta[:, None], mix.eta, test.data


def _sample_subset(rng, pool_n: int, size: int, y: np.ndarray):
    """Index sample without replacement; redrawn (seed advances) until both
    classes are present.  Returns (indices, number of redraws)."""
    redraws = 0
    while True:
        idx = rng.choice(pool_n, size=size, replace=False)
        if np.any(y[idx] > 0) and np.any(y[idx] < 0):
            return idx, redraws
        redraws += 1
        if redraws > 1000:
            raise RuntimeError("could not sample a two-class subset")


def _split_indices(rng, idx: np.ndarray, mode: str, y: np.ndarray):
    if mode == "fixed-validation":
        raise AssertionError("handled by caller")
    perm = rng.permutation(idx)
    n = perm.size
    n_train = n // 3 if mode == "1-to-2" else (2 * n) // 3
    n_train = max(2, n_train)
    tr, va = perm[:n_train], perm[n_train:]
    if (not (np.any(y[tr] > 0) and np.any(y[tr] < 0))
            or va.size == 0 or not np.any(np.isfinite(y[va]))):
        # degenerate split: rotate until the training side has both classes
        for shift in range(1, n):
            rolled = np.roll(perm, shift)
            tr, va = rolled[:n_train], rolled[n_train:]
            if np.any(y[tr] > 0) and np.any(y[tr] < 0):
                break
    return tr, va


def _kernel_candidates(config: ExperimentConfig, X) -> list[KernelSpec]:
    if config.kernel == LINEAR:
        return [KernelSpec(LINEAR)]
    # larger bandwidths first so ties resolve toward them
    bws = sorted(bandwidth_grid(X, config.bandwidth_quantiles), reverse=True)
    return [KernelSpec(GAUSSIAN_RBF, h) for h in bws]


def _error(y, f) -> float:
    return float(np.mean(y * f <= 0))


def _fit_method(method: str, train: Dataset, val: Dataset, test: Dataset,
                config: ExperimentConfig, priv_X, eta_train):
    """Grid-search one method; returns the test error of the winner.

    Tie-breaking is deterministic: lowest validation error, then smaller C,
    then larger bandwidth (candidate enumeration order encodes the rest).
    """
    specs = _kernel_candidates(config, train.X)
    best = None  # (val_err, C, spec_rank, extra_rank) -> test_err

    def consider(val_err, C, spec_rank, extra_rank, test_err):
        nonlocal best
        key = (val_err, C, spec_rank, extra_rank)
        if best is None or key < best[0]:
            best = (key, test_err)

    if method == "svm":
        for si, spec in enumerate(specs):
            for C in config.C_grid:
                model = solve_wsvm(train, spec, np.full(train.n, C))
                consider(_error(val.y, predict(model, val)), C, si, 0,
                         _error(test.y, predict(model, test)))
    elif method == "wsvm-prob":
        if eta_train is None:
            raise ValueError("wsvm-prob needs confidence scores")
        for si, spec in enumerate(specs):
            for ti, tau in enumerate(config.tau_grid):
                w = probability_weights(eta_train, train.y, tau)
                if not np.any(w > 0):
                    continue
                for C in config.C_grid:
                    model = solve_wsvm(train, spec, C * w)
                    consider(_error(val.y, predict(model, val)), C, si, ti,
                             _error(test.y, predict(model, test)))
    elif method == "wsvm-learned":
        wl = WeightLearningConfig(deltas=tuple(config.delta_grid),
                                  max_outer_iter=config.max_outer_iter)
        for si, spec in enumerate(specs):
            res = learn_weights(train, val, spec, wl)
            consider(res.val_error, 0.0, si, 0,
                     _error(test.y, res.model.predict(test.X)))
    elif method in ("svmplus", "wsvm-from-svmplus"):
        if priv_X is None:
            raise ValueError(f"{method} needs privileged features")
        priv = PrivilegedSet(priv_X)
        priv_specs = ([KernelSpec(LINEAR)] if config.kernel == LINEAR else
                      [KernelSpec(GAUSSIAN_RBF, h)
                       for h in sorted(bandwidth_grid(
                           priv_X, config.bandwidth_quantiles), reverse=True)])
        for si, spec in enumerate(specs):
            for pi, pspec in enumerate(priv_specs):
                for C in config.C_grid:
                    for gi, gam in enumerate(config.gamma_grid):
                        plus = solve_svmplus(train, priv, spec, pspec, C, gam)
                        if method == "svmplus":
                            f_test = plus.predict(test.X)
                        else:
                            w = solve_wsvm(train, spec,
                                           plus.alpha + plus.beta,
                                           b_override=plus.b)
                            f_test = predict(w, test)
                        consider(_error(val.y, plus.predict(val.X)), C,
                                 si, pi * 1000 + gi,
                                 _error(test.y, f_test))
    else:
        raise ValueError(f"unknown method {method!r}")
    return best[1]


def run_experiment(config: ExperimentConfig) -> ResultTable:
    """The full protocol: sample subsets from a fixed pool, split into
    train/validation, grid-search by validation error, report test error
    mean and population standard deviation across repetitions."""
    root = np.random.SeedSequence(config.seed)
    data_seq, proto_seq = root.spawn(2)
    pool, priv_X, eta, test = _generate_pool(config, data_seq)
    if config.split == "fixed-validation":
        val_pool = (generate_blobs_with_outliers(
            n_per_class=config.n_val // 2, outlier_count=0,
            seed=int(data_seq.spawn(1)[0].generate_state(1)[0])).data
            if config.source == "blobs"
            else generate_w_mixture(
                config.n_val,
                seed=int(data_seq.spawn(1)[0].generate_state(1)[0])).data)
    table = ResultTable()
    rep_seqs = proto_seq.spawn(config.repetitions)
    for subset in config.subset_sizes:
        errors = {m: [] for m in config.methods}
        for rep in range(config.repetitions):
            rng = np.random.default_rng(rep_seqs[rep].spawn(1)[0])
            idx, redraws = _sample_subset(rng, pool.n, subset, pool.y)
            table.resample_events += redraws
            if config.split == "fixed-validation":
                tr_idx, val = idx, val_pool
            else:
                tr_idx, va_idx = _split_indices(rng, idx, config.split,
                                                pool.y)
                val = pool.subset(va_idx)
            train = pool.subset(tr_idx)
            pX = None if priv_X is None else priv_X[tr_idx]
            et = None if eta is None else np.asarray(eta).ravel()[tr_idx]
            for m in config.methods:
                errors[m].append(
                    _fit_method(m, train, val, test, config, pX, et))
        for m in config.methods:
            e = np.asarray(errors[m])
            table.rows.append(ResultRow(
                method=m, subset=subset, split=config.split,
                mean_error=float(np.mean(e)), std=float(np.std(e)),
                reps=config.repetitions))
    return table


# ---------------------------------------------------------------------------
# study drivers


def replicate_svmplus_with_wsvm(plus: SvmPlusModel, points) -> dict:
    """Refit a WSVM with the weights induced by an SVM+ model and the SVM+
    offset copied in; reports prediction agreement on ``points``."""
    w = solve_wsvm(plus.data, plus.spec, plus.alpha + plus.beta,
                   b_override=plus.b)
    f_w = predict(w, points)
    f_p = plus.predict(points)
    agree = float(np.mean(np.sign(f_w) == np.sign(f_p)))
    return {
        "model": w,
        "agreement": agree,
        "max_decision_diff": float(np.max(np.abs(f_w - f_p))),
    }


def figure3_study(repetitions: int = 50, seed: int = 0, C: float = 1.0,
                  n_per_class: int = 30) -> list[dict]:
    """Per repetition: uniform-cost SVM versus a WSVM with zero weight on
    the planted wrong-label points, both linear, evaluated on a clean test
    sample.  Returns one record per repetition."""
    root = np.random.SeedSequence(seed)
    out = []
    for rep, seq in enumerate(root.spawn(repetitions)):
        s1, s2 = (int(s.generate_state(1)[0]) for s in seq.spawn(2))
        sample = generate_blobs_with_outliers(
            n_per_class=n_per_class, seed=s1)
        test = generate_blobs_with_outliers(
            n_per_class=500, outlier_count=0, seed=s2).data
        spec = KernelSpec(LINEAR)
        svm = solve_wsvm(sample.data, spec, np.full(sample.data.n, C))
        c = np.full(sample.data.n, C)
        c[sample.outlier_mask] = 0.0
        wsvm = solve_wsvm(sample.data, spec, c)
        out.append({
            "rep": rep,
            "svm_error": _error(test.y, predict(svm, test)),
            "wsvm_error": _error(test.y, predict(wsvm, test)),
        })
    return out


def wshape_study(repetitions: int = 20, seed: int = 0, n_train: int = 60,
                 n_val: int = 600, n_test: int = 1000,
                 deltas=(0.1, 1.0)) -> list[dict]:
    """W-mixture comparison of the uniform-weight smooth baseline against
    learned weights, with a large validation set (the 1-to-10 regime)."""
    root = np.random.SeedSequence(seed)
    out = []
    for rep, seq in enumerate(root.spawn(repetitions)):
        s1, s2, s3 = (int(s.generate_state(1)[0]) for s in seq.spawn(3))
        train = generate_w_mixture(n_train, seed=s1).data
        val = generate_w_mixture(n_val, seed=s2).data
        test = generate_w_mixture(n_test, seed=s3).data
        spec = KernelSpec(GAUSSIAN_RBF, float(np.median(
            bandwidth_grid(train.X, (0.5,)))))
        res = learn_weights(train, val, spec, WeightLearningConfig(
            deltas=tuple(deltas), max_outer_iter=40))
        svm = solve_wsvm(train, spec, np.ones(train.n))
        out.append({
            "rep": rep,
            "svm_error": _error(test.y, predict(svm, test)),
            "learned_error": _error(test.y, res.model.predict(test.X)),
        })
    return out
