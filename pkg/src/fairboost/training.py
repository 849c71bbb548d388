"""Boosting engine: classical gradient tree boosting plus the fair variant.

The model is additive, F_m(x) = f0 + sum_k gamma_k * h_k(x), with shallow
regression trees as stages and the logistic negative log-likelihood as
the predictor loss. In the fair modes an adversary network watches
sigma(F) and tries to recover the sensitive attribute; its input
gradient, chained through the sigmoid, is subtracted from the pseudo
residuals so each new tree trades label fit against making the adversary
worse. lambda scales that trade-off, 0 recovering plain boosting
exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .adversary import (
    AdamOptimizer,
    AdversaryNet,
    adversary_loss,
    init_xavier,
    input_gradient,
    param_gradients,
    sgd_step,
)
from .cart import RegressionTree, TreeParams, fit_tree
from .data import Dataset
from .errors import ConfigError, DataError, MetricError, TrainingError
from .metrics import accuracy, disparate_mistreatment, p_rule
from .util import sigmoid, substream_seed, write_atomic

MODES = ("plain", "demographic_parity", "equalized_odds")
EPS_P = 1e-7

TRACE_COLUMNS = (
    "iter",
    "train_acc",
    "val_acc",
    "train_prule",
    "val_prule",
    "d_fpr",
    "d_fnr",
    "pred_loss",
    "adv_loss",
)


@dataclass
class TrainConfig:
    """Everything train() needs besides the data.

    lambda is called lam here (keyword clash) but keeps its name in the
    JSON form. The trainer weighs the adversary's summed loss against
    the predictor's mean loss, so lam is multiplied internally by the
    number of fitted rows; the published trade-off values (0.015 and
    friends) assume that convention.
    """

    iterations: int
    mode: str = "plain"
    lam: float = 0.0
    shrinkage: float = 0.1
    adversary_lr: float = 0.3
    adversary_steps_per_iter: int = 10
    warmstart_iters: int = 20
    max_depth: int = 3
    min_samples_leaf: int = 1
    adversary_layers: tuple[int, ...] = (16, 8)
    adversary_optimizer: str = "sgd"
    use_line_search: bool = False
    gamma_max: float = 4.0
    validation_fraction: float = 0.1
    seed: int = 0

    _INT_FIELDS = (
        "iterations",
        "adversary_steps_per_iter",
        "warmstart_iters",
        "max_depth",
        "min_samples_leaf",
        "seed",
    )
    _FLOAT_FIELDS = (
        "lam",
        "shrinkage",
        "adversary_lr",
        "gamma_max",
        "validation_fraction",
    )

    def validate(self) -> None:
        for name in self._INT_FIELDS:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"config field '{name}' must be an integer, got {v!r}")
        for name in self._FLOAT_FIELDS:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"config field '{name}' must be a number, got {v!r}")
        if self.iterations < 0:
            raise ConfigError("config field 'iterations' must be >= 0")
        if self.mode not in MODES:
            raise ConfigError(f"config field 'mode' must be one of {MODES}, got {self.mode!r}")
        if self.lam < 0:
            raise ConfigError("config field 'lambda' must be >= 0")
        if self.shrinkage <= 0:
            raise ConfigError("config field 'shrinkage' must be > 0")
        if self.adversary_lr <= 0:
            raise ConfigError("config field 'adversary_lr' must be > 0")
        if self.adversary_steps_per_iter < 1:
            raise ConfigError("config field 'adversary_steps_per_iter' must be >= 1")
        if self.warmstart_iters < 0:
            raise ConfigError("config field 'warmstart_iters' must be >= 0")
        if self.max_depth < 0:
            raise ConfigError("config field 'max_depth' must be >= 0")
        if self.min_samples_leaf < 1:
            raise ConfigError("config field 'min_samples_leaf' must be >= 1")
        if not self.adversary_layers or any(
            isinstance(h, bool) or not isinstance(h, int) or h < 1 for h in self.adversary_layers
        ):
            raise ConfigError("config field 'adversary_layers' must be positive integers")
        if self.adversary_optimizer not in ("sgd", "adam"):
            raise ConfigError("config field 'adversary_optimizer' must be 'sgd' or 'adam'")
        if not isinstance(self.use_line_search, bool):
            raise ConfigError("config field 'use_line_search' must be a boolean")
        if self.gamma_max <= 0:
            raise ConfigError("config field 'gamma_max' must be > 0")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError("config field 'validation_fraction' must be in [0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        if "iterations" not in d:
            raise ConfigError("config field 'iterations' is required")
        kwargs = {}
        for key, value in d.items():
            name = "lam" if key == "lambda" else key
            if name == "lam" and "lam" in kwargs:
                raise ConfigError("config field 'lambda' given twice")
            if name not in cls.__dataclass_fields__ or name.startswith("_"):
                raise ConfigError(f"unknown config field '{key}'")
            if name == "adversary_layers":
                if not isinstance(value, (list, tuple)):
                    raise ConfigError("config field 'adversary_layers' must be a list")
                value = tuple(value)
            kwargs[name] = value
        config = cls(**kwargs)
        config.validate()
        return config

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "mode": self.mode,
            "lambda": self.lam,
            "shrinkage": self.shrinkage,
            "adversary_lr": self.adversary_lr,
            "adversary_steps_per_iter": self.adversary_steps_per_iter,
            "warmstart_iters": self.warmstart_iters,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "adversary_layers": list(self.adversary_layers),
            "adversary_optimizer": self.adversary_optimizer,
            "use_line_search": self.use_line_search,
            "gamma_max": self.gamma_max,
            "validation_fraction": self.validation_fraction,
            "seed": self.seed,
        }


@dataclass
class BoostingModel:
    """Trained additive model plus the adversary it was trained against."""

    mode: str
    f0: float
    stages: list
    adversary: AdversaryNet | None
    config: TrainConfig
    feature_names: list[str]
    schema: dict | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "f0": self.f0,
            "stages": [{"tree": tree.to_dict(), "gamma": gamma} for tree, gamma in self.stages],
            "adversary": None if self.adversary is None else self.adversary.to_dict(),
            "config": self.config.to_dict(),
            "feature_names": list(self.feature_names),
            "schema": self.schema,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostingModel":
        try:
            return cls(
                mode=d["mode"],
                f0=float(d["f0"]),
                stages=[
                    (RegressionTree.from_dict(st["tree"]), float(st["gamma"]))
                    for st in d["stages"]
                ],
                adversary=None if d.get("adversary") is None else AdversaryNet.from_dict(d["adversary"]),
                config=TrainConfig.from_dict(d["config"]),
                feature_names=list(d["feature_names"]),
                schema=d.get("schema"),
            )
        except KeyError as exc:
            raise DataError(f"model file is missing field {exc}") from exc


def save_model(model: BoostingModel, path) -> None:
    write_atomic(path, json.dumps(model.to_dict(), indent=2, sort_keys=True) + "\n")


def load_model(path) -> BoostingModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid model JSON: {exc}") from exc
    return BoostingModel.from_dict(d)


@dataclass
class TrainingTrace:
    """Per-iteration metrics, one row per boosting stage."""

    rows: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def final(self, column: str) -> float:
        if not self.rows:
            raise ValueError("trace is empty")
        return self.rows[-1][column]

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    def to_csv_text(self) -> str:
        lines = [",".join(TRACE_COLUMNS)]
        for row in self.rows:
            cells = [str(row["iter"])]
            cells += [f"{row[c]:.6g}" for c in TRACE_COLUMNS[1:]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Losses and residuals


def init_f0(labels) -> float:
    """Log odds of the label base rate, clipped away from 0 and 1."""
    y = np.asarray(labels, dtype=float)
    n = y.size
    if n < 1:
        raise ValueError("labels must be nonempty")
    p = float(np.clip(y.mean(), 1.0 / (2 * n), 1.0 - 1.0 / (2 * n)))
    return float(np.log(p / (1.0 - p)))


def predictor_loss(y, F):
    """Binary NLL of the label under probability sigma(F), elementwise."""
    y_arr = np.asarray(y, dtype=float)
    p = np.clip(sigmoid(np.asarray(F, dtype=float)), EPS_P, 1.0 - EPS_P)
    out = -(y_arr * np.log(p) + (1.0 - y_arr) * np.log(1.0 - p))
    return float(out) if out.ndim == 0 else out


def predictor_residuals(y, F) -> np.ndarray:
    """Negative gradient of the predictor loss: r = y - sigma(F)."""
    y_arr = np.asarray(y, dtype=float)
    F_arr = np.asarray(F, dtype=float)
    if y_arr.shape != F_arr.shape:
        raise ValueError(f"shape mismatch: y {y_arr.shape} vs F {F_arr.shape}")
    return y_arr - sigmoid(F_arr)


def _adversary_inputs(F, y, mode: str) -> np.ndarray:
    p = sigmoid(np.asarray(F, dtype=float))
    if mode == "demographic_parity":
        return p[:, None]
    return np.column_stack([p, np.asarray(y, dtype=float)])


def adversary_residuals(net: AdversaryNet, F, y, s, mode: str) -> np.ndarray:
    """Per-sample t_i = -dL_adv/dF_i, chained through the sigmoid link.

    The adversary sees v = (sigma(F)) in demographic-parity mode or
    (sigma(F), y) in equalized-odds mode; only the first coordinate
    depends on F, so t = -(dL/dv)[0] * sigma(F) * (1 - sigma(F)).
    """
    if mode == "plain":
        raise ConfigError("adversary residuals are undefined in plain mode")
    if mode not in MODES:
        raise ConfigError(f"unknown mode '{mode}'")
    expected = 1 if mode == "demographic_parity" else 2
    if net.d_in != expected:
        raise ConfigError(
            f"adversary input dimension {net.d_in} does not match mode '{mode}' (needs {expected})"
        )
    F_arr = np.asarray(F, dtype=float)
    grad_v = input_gradient(net, _adversary_inputs(F_arr, y, mode), s)
    p = sigmoid(F_arr)
    return -(grad_v[:, 0] * p * (1.0 - p))


def combine_residuals(r, t, lam: float) -> np.ndarray:
    """u = r - lam * t, the regression target of the next stage."""
    r_arr = np.asarray(r, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if r_arr.shape != t_arr.shape:
        raise ValueError(f"shape mismatch: r {r_arr.shape} vs t {t_arr.shape}")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    return r_arr - lam * t_arr


def line_search_gamma(F_prev, h, y, s, net, lam, mode, gamma_max: float = 4.0, tol: float = 1e-4) -> float:
    """Stage weight by golden-section search over [0, gamma_max].

    Minimizes sum_i predictor_loss(y_i, F_i + gamma h_i) minus lam times
    the summed adversary loss at the shifted scores. With a zero update
    direction the objective is flat and 0 is returned by convention.
    """
    F_arr = np.asarray(F_prev, dtype=float)
    h_arr = np.asarray(h, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if F_arr.size == 0:
        raise ValueError("empty inputs")
    if not np.any(h_arr):
        return 0.0

    def objective(gamma: float) -> float:
        F_new = F_arr + gamma * h_arr
        total = float(np.sum(predictor_loss(y_arr, F_new)))
        if net is not None and lam != 0.0:
            v = _adversary_inputs(F_new, y_arr, mode)
            total -= lam * float(np.sum(adversary_loss(net, v, s)))
        return total

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, float(gamma_max)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = objective(d)
    # endpoints included so boundary minima return exactly 0 or gamma_max
    candidates = (a, 0.5 * (a + b), b)
    values = [objective(g) for g in candidates]
    return float(candidates[int(np.argmin(values))])


# ---------------------------------------------------------------------------
# Prediction


def predict_scores(model: BoostingModel, features) -> np.ndarray:
    """Raw additive scores F(x), stage by stage."""
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(model.feature_names):
        raise ValueError(f"expected shape (n, {len(model.feature_names)}), got {X.shape}")
    F = np.full(X.shape[0], model.f0, dtype=float)
    for tree, gamma in model.stages:
        F += gamma * tree.predict(X)
    return F


def predict_proba(model: BoostingModel, features) -> np.ndarray:
    """P(Y=1 | x) = sigma(F(x))."""
    return sigmoid(predict_scores(model, features))


def classify(model: BoostingModel, features) -> np.ndarray:
    """Hard labels: 1 iff F(x) > 0 (probability strictly above 0.5)."""
    return (predict_scores(model, features) > 0.0).astype(np.int64)


# ---------------------------------------------------------------------------
# Training loop


def _nan_on_metric_error(fn, *args) -> float:
    try:
        out = fn(*args)
    except MetricError:
        return float("nan")
    return out


def train(dataset: Dataset, config: TrainConfig):
    """Run boosting per the config; returns (BoostingModel, TrainingTrace).

    Plain mode is classical gradient tree boosting. In the fair modes
    the first warmstart_iters stages are fitted without fairness
    pressure while the adversary stays frozen; the adversary is then
    pre-trained for warmstart_iters full-batch epochs on those scores,
    and from that point on every stage uses the combined residuals and
    the adversary takes adversary_steps_per_iter updates per iteration.
    Everything is deterministic given config.seed.
    """
    config.validate()
    n = dataset.n
    fair = config.mode != "plain"

    # Held-out validation rows for the trace curves.
    fit_idx = np.arange(n)
    val_idx = np.arange(0)
    if config.validation_fraction > 0.0 and n >= 2:
        n_val = min(int(round(n * config.validation_fraction)), n - 1)
        if n_val >= 1:
            perm = np.random.default_rng(substream_seed(config.seed, 1)).permutation(n)
            val_idx = np.sort(perm[:n_val])
            fit_idx = np.sort(perm[n_val:])
    X_fit = dataset.features[fit_idx]
    y_fit = dataset.labels[fit_idx]
    s_fit = dataset.sensitive[fit_idx]
    X_val = dataset.features[val_idx]
    y_val = dataset.labels[val_idx]
    s_val = dataset.sensitive[val_idx]
    has_val = val_idx.size > 0

    f0 = init_f0(y_fit)
    F_fit = np.full(fit_idx.size, f0, dtype=float)
    F_val = np.full(val_idx.size, f0, dtype=float)

    adv = None
    optimizer = None
    if fair:
        d_in = 1 if config.mode == "demographic_parity" else 2
        adv = init_xavier((d_in, *config.adversary_layers, 1), substream_seed(config.seed, 2))
        if config.adversary_optimizer == "adam":
            optimizer = AdamOptimizer(adv, config.adversary_lr)

    def adversary_update(V):
        grads = param_gradients(adv, V, s_fit)
        if optimizer is not None:
            optimizer.step(adv, grads)
        else:
            sgd_step(adv, grads, config.adversary_lr)

    # lam weighs the adversary's summed loss against the mean predictor
    # loss, hence the factor n; see TrainConfig docstring.
    lam_eff = config.lam * fit_idx.size
    warm = config.warmstart_iters if fair else 0
    params = TreeParams(config.max_depth, config.min_samples_leaf)

    stages = []
    trace = TrainingTrace()
    preds_all = np.empty(n, dtype=np.int64)

    for m in range(config.iterations):
        joint = fair and m >= warm
        if fair and m == warm and warm > 0:
            V = _adversary_inputs(F_fit, y_fit, config.mode)
            for _ in range(warm):
                adversary_update(V)

        r = predictor_residuals(y_fit, F_fit)
        if joint and config.lam > 0.0:
            t = adversary_residuals(adv, F_fit, y_fit, s_fit, config.mode)
            u = combine_residuals(r, t, lam_eff)
        else:
            u = r
        if not np.isfinite(u).all():
            raise TrainingError(f"non-finite residuals at iteration {m + 1}")

        tree = fit_tree(X_fit, u, params)
        h = tree.predict(X_fit)
        if config.use_line_search:
            gamma = line_search_gamma(
                F_fit,
                h,
                y_fit,
                s_fit,
                adv if joint else None,
                lam_eff if joint else 0.0,
                config.mode,
                gamma_max=config.gamma_max,
            )
        else:
            gamma = config.shrinkage
        F_fit = F_fit + gamma * h
        if has_val:
            F_val = F_val + gamma * tree.predict(X_val)
        if not np.isfinite(F_fit).all():
            raise TrainingError(f"non-finite scores at iteration {m + 1}")
        stages.append((tree, float(gamma)))

        adv_loss = float("nan")
        if fair:
            V = _adversary_inputs(F_fit, y_fit, config.mode)
            if joint:
                for _ in range(config.adversary_steps_per_iter):
                    adversary_update(V)
            adv_loss = float(np.mean(adversary_loss(adv, V, s_fit)))

        preds_all[fit_idx] = F_fit > 0.0
        if has_val:
            preds_all[val_idx] = F_val > 0.0
        preds_val = (F_val > 0.0).astype(np.int64)
        fair_set = (preds_val, y_val, s_val) if has_val else (preds_all, dataset.labels, dataset.sensitive)
        dm = _nan_on_metric_error(disparate_mistreatment, *fair_set)
        d_fpr, d_fnr = dm if isinstance(dm, tuple) else (float("nan"), float("nan"))
        trace.rows.append(
            {
                "iter": m + 1,
                "train_acc": accuracy(preds_all, dataset.labels),
                "val_acc": accuracy(preds_val, y_val) if has_val else float("nan"),
                "train_prule": _nan_on_metric_error(p_rule, preds_all, dataset.sensitive),
                "val_prule": _nan_on_metric_error(p_rule, preds_val, s_val) if has_val else float("nan"),
                "d_fpr": d_fpr,
                "d_fnr": d_fnr,
                "pred_loss": float(np.mean(predictor_loss(y_fit, F_fit))),
                "adv_loss": adv_loss,
            }
        )

    model = BoostingModel(
        mode=config.mode,
        f0=f0,
        stages=stages,
        adversary=adv,
        config=config,
        feature_names=list(dataset.feature_names),
    )
    return model, trace
