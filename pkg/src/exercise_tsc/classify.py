"""Linear classifiers on standardised features.

Two model kinds share one container, :class:`LinearModel`:

* ``ridge``: one-vs-rest least squares on ``{-1, +1}`` targets, solved in
  closed form (primal or dual, whichever system is smaller) with an
  unpenalised intercept. Probabilities are the softmax of the decision values.
* ``logistic``: multinomial cross-entropy. The objective minimised is::

      (1 / N) * (sum_i CE_i + R(W) / C)

  with ``R = ||W||^2 / 2`` (``l2``) or ``||W||_1`` (``l1``); intercepts are
  unpenalised. This is the usual ``C``-parametrised objective divided by
  ``C * N``, so ``C`` means the same thing it does in scikit-learn.
  It is solved by monotone FISTA with backtracking; the ``l1`` term enters
  through soft-thresholding.

Features are standardised with statistics fitted on the training rows;
features with std below 1e-8 get a scale of 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._store import load_archive, save_archive
from .errors import ShapeMismatchError, SingularSystemError, UnknownLabelError, ValidationError

log = logging.getLogger(__name__)

RIDGE = "ridge"
LOGISTIC = "logistic"
RIDGE_ALPHAS = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
DEFAULT_C = 0.01
STD_GUARD = 1e-8
MASK_THRESHOLD = 1e-8
FORMAT_VERSION = 1


@dataclass
class LinearModel:
    kind: str
    classes: tuple
    weights: np.ndarray          # (num_classes, num_kept_features)
    biases: np.ndarray           # (num_classes,)
    scaler_mean: np.ndarray      # (num_features,)
    scaler_std: np.ndarray
    regularization: float
    feature_mask: Optional[np.ndarray] = None
    seed: int = 0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.classes = tuple(self.classes)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        k = len(self.classes)
        if self.weights.ndim != 2 or self.weights.shape[0] != k or self.biases.shape != (k,):
            raise ShapeMismatchError("weights/biases do not match the class list")
        kept = self.num_features if self.feature_mask is None else int(np.sum(self.feature_mask))
        if self.weights.shape[1] != kept:
            raise ShapeMismatchError(
                f"weights have {self.weights.shape[1]} columns, mask keeps {kept}")
        if np.any(self.scaler_std <= 0):
            raise ValidationError("scaler_std must be positive")

    @property
    def num_features(self) -> int:
        return len(self.scaler_mean)

    def _design(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.num_features:
            raise ShapeMismatchError(
                f"expected {self.num_features} features, got shape {X.shape}")
        Z = (X - self.scaler_mean) / self.scaler_std
        if self.feature_mask is not None:
            Z = Z[:, self.feature_mask]
        return Z

    def decision_function(self, X) -> np.ndarray:
        return self._design(X) @ self.weights.T + self.biases

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        idx = np.argmax(self.decision_function(X), axis=1)
        return np.asarray(self.classes, dtype=object)[idx]

    # persistence --------------------------------------------------------

    def save(self, path) -> None:
        arrays = {
            "weights": self.weights,
            "biases": self.biases,
            "scaler_mean": np.asarray(self.scaler_mean, dtype=np.float64),
            "scaler_std": np.asarray(self.scaler_std, dtype=np.float64),
        }
        if self.feature_mask is not None:
            arrays["feature_mask"] = np.asarray(self.feature_mask, dtype=bool)
        meta = {
            "format": "exercise_tsc.linear_model",
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "classes": list(self.classes),
            "regularization": float(self.regularization),
            "seed": int(self.seed),
            "info": {k: v for k, v in self.info.items() if k != "history"},
        }
        save_archive(path, arrays, meta)

    @classmethod
    def load(cls, path) -> "LinearModel":
        arrays, meta = load_archive(path)
        if meta.get("format") != "exercise_tsc.linear_model":
            raise ValidationError(f"{path}: not a linear model archive")
        if meta.get("version") != FORMAT_VERSION:
            raise ValidationError(f"{path}: unsupported model version {meta.get('version')}")
        return cls(
            kind=meta["kind"], classes=tuple(meta["classes"]),
            weights=arrays["weights"], biases=arrays["biases"],
            scaler_mean=arrays["scaler_mean"], scaler_std=arrays["scaler_std"],
            regularization=meta["regularization"],
            feature_mask=arrays.get("feature_mask"), seed=meta["seed"],
            info=meta.get("info", {}),
        )


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def fit_scaler(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < STD_GUARD, 1.0, std)
    return mean, std


def _prepare(X, y, classes):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatchError(f"X must be 2-D, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("X contains NaN or Inf")
    y = np.asarray(y, dtype=object)
    if y.shape != (X.shape[0],):
        raise ShapeMismatchError("y length does not match X")
    if classes is None:
        classes = tuple(sorted(set(y.tolist()), key=str))
    classes = tuple(classes)
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        idx = np.array([lookup[v] for v in y], dtype=np.int64)
    except KeyError as exc:
        raise UnknownLabelError(f"label {exc} not in classes {classes}") from None
    if X.shape[0] < len(classes):
        raise ValidationError("fewer samples than classes")
    return X, idx, classes


def _one_vs_rest(idx: np.ndarray, k: int) -> np.ndarray:
    Y = -np.ones((idx.size, k))
    Y[np.arange(idx.size), idx] = 1.0
    return Y


# --------------------------------------------------------------------------
# ridge


class RidgeSolver:
    """Eigendecomposition of the centred design, reusable across penalties."""

    def __init__(self, Z: np.ndarray, Y: np.ndarray):
        self.z_mean = Z.mean(axis=0)
        self.y_mean = Y.mean(axis=0)
        self.Zc = Z - self.z_mean
        self.Yc = Y - self.y_mean
        n, p = self.Zc.shape
        self.dual = p > n
        gram = self.Zc @ self.Zc.T if self.dual else self.Zc.T @ self.Zc
        evals, self.evecs = np.linalg.eigh(gram)
        self.evals = np.clip(evals, 0.0, None)
        rhs = self.Yc if self.dual else self.Zc.T @ self.Yc
        self.proj = self.evecs.T @ rhs
        scale = max(1.0, float(self.evals.max(initial=0.0)))
        # numerically null directions: the exact right-hand side has no component there
        self.null = self.evals <= max(n, p) * np.finfo(float).eps * scale
        self.proj[self.null] = 0.0

    def coef(self, alpha: float):
        """``(W, b)`` with ``W`` shaped ``(targets, features)``."""
        if alpha == 0 and self.null.any():
            raise SingularSystemError("normal equations are singular; use alpha > 0")
        denom = np.where(self.null, 1.0, self.evals + alpha)
        sol = self.evecs @ (self.proj / denom[:, None])
        W = (self.Zc.T @ sol) if self.dual else sol
        b = self.y_mean - self.z_mean @ W
        return W.T, b


def fit_ridge(X, y, alpha: float = 1.0, classes: Optional[Sequence] = None,
              seed: int = 0) -> LinearModel:
    """Closed-form one-vs-rest ridge classifier."""
    if alpha < 0:
        raise ValidationError("alpha must be non-negative")
    X, idx, classes = _prepare(X, y, classes)
    mean, std = fit_scaler(X)
    Z = (X - mean) / std
    W, b = RidgeSolver(Z, _one_vs_rest(idx, len(classes))).coef(alpha)
    return LinearModel(RIDGE, classes, W, b, mean, std, float(alpha), None, seed,
                       {"n_train": int(X.shape[0])})


def select_ridge_alpha(X_train, y_train, X_val, y_val, alphas=RIDGE_ALPHAS,
                       classes: Optional[Sequence] = None) -> tuple:
    """Best penalty by validation accuracy; ties go to the earlier alpha.

    Returns ``(alpha, {alpha: accuracy})``.
    """
    X, idx, classes = _prepare(X_train, y_train, classes)
    mean, std = fit_scaler(X)
    solver = RidgeSolver((X - mean) / std, _one_vs_rest(idx, len(classes)))
    Zv = (np.asarray(X_val, dtype=np.float64) - mean) / std
    truth = np.asarray(y_val, dtype=object)
    scores = {}
    for a in alphas:
        W, b = solver.coef(a)
        pred = np.asarray(classes, dtype=object)[np.argmax(Zv @ W.T + b, axis=1)]
        scores[float(a)] = float(np.mean(pred == truth))
    best = max(scores, key=lambda a: (scores[a], -list(scores).index(a)))
    return best, scores


# --------------------------------------------------------------------------
# logistic


def logistic_objective(W, b, Z, idx, C: float, penalty: str = "l2") -> float:
    """Full penalised multinomial objective (see module docstring)."""
    n = Z.shape[0]
    logits = Z @ W.T + b
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    ce = np.sum(lse - logits[np.arange(n), idx])
    reg = 0.5 * np.sum(W * W) if penalty == "l2" else np.sum(np.abs(W))
    return float((ce + reg / C) / n)


def logistic_gradient(W, b, Z, idx, C: float, penalty: str = "l2"):
    """Gradient of the smooth part: everything for ``l2``, the data term for ``l1``."""
    n = Z.shape[0]
    P = softmax(Z @ W.T + b)
    P[np.arange(n), idx] -= 1.0
    gW = P.T @ Z / n
    gb = P.sum(axis=0) / n
    if penalty == "l2":
        gW = gW + W / (C * n)
    return gW, gb


def _binary_smooth(w, b, Z, t, C, penalty):
    n = Z.shape[0]
    m = t * (Z @ w + b)
    loss = np.logaddexp(0.0, -m).sum()
    s = -t * _sigmoid(-m)
    gw = Z.T @ s / n
    gb = s.sum() / n
    if penalty == "l2":
        loss += 0.5 * (w @ w) / C
        gw = gw + w / (C * n)
    return loss / n, gw, gb


def _sigmoid(v):
    return np.exp(-np.logaddexp(0.0, -v))


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _mfista(smooth, W0, b0, l1: float, tol: float, max_iter: int):
    """Monotone FISTA with backtracking.

    ``smooth(W, b) -> (value, gW, gb)``; ``l1`` weights ``||W||_1`` (not ``b``).
    Returns ``(W, b, info)``.
    """
    def total(W, b, f=None):
        f = smooth(W, b)[0] if f is None else f
        return f + l1 * np.sum(np.abs(W))

    W, b = W0.copy(), b0.copy()
    fx = total(W, b)
    yW, yb = W.copy(), b.copy()
    t = 1.0
    L = 1.0
    history = [fx]
    converged = False
    gnorm = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        fy, gW, gb = smooth(yW, yb)
        while True:
            zW = _soft_threshold(yW - gW / L, l1 / L) if l1 else yW - gW / L
            zb = yb - gb / L
            fz = smooth(zW, zb)[0]
            dW, db = zW - yW, zb - yb
            quad = fy + np.sum(gW * dW) + gb @ db + 0.5 * L * (np.sum(dW * dW) + db @ db)
            if fz <= quad + 1e-12 * abs(quad) or L > 1e16:
                break
            L *= 2.0
        gnorm = L * math.sqrt(np.sum(dW * dW) + db @ db)
        Fz = total(zW, zb, fz)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if Fz <= fx:
            xW_new, xb_new, fx_new = zW, zb, Fz
        else:
            xW_new, xb_new, fx_new = W, b, fx
        yW = xW_new + (t / t_next) * (zW - xW_new) + ((t - 1.0) / t_next) * (xW_new - W)
        yb = xb_new + (t / t_next) * (zb - xb_new) + ((t - 1.0) / t_next) * (xb_new - b)
        W, b, fx, t = xW_new, xb_new, fx_new, t_next
        history.append(fx)
        if gnorm <= tol:
            converged = True
            break
        # let the step grow back slowly after early backtracking
        L = max(L * 0.95, 1e-12)
    info = {"n_iter": it, "converged": converged, "grad_norm": float(gnorm),
            "objective": float(fx), "history": history}
    return W, b, info


def fit_logistic(X, y, C: float = DEFAULT_C, penalty: str = "l2",
                 classes: Optional[Sequence] = None, feature_mask=None,
                 tol: float = 1e-6, max_iter: int = 10_000, seed: int = 0) -> LinearModel:
    """Multinomial logistic regression; ``feature_mask`` restricts the columns used."""
    if penalty not in ("l1", "l2"):
        raise ValidationError(f"penalty must be 'l1' or 'l2', got {penalty!r}")
    if not C > 0:
        raise ValidationError("C must be positive")
    X, idx, classes = _prepare(X, y, classes)
    mean, std = fit_scaler(X)
    Z = (X - mean) / std
    if feature_mask is not None:
        feature_mask = np.asarray(feature_mask, dtype=bool)
        if feature_mask.shape != (X.shape[1],):
            raise ShapeMismatchError("feature_mask length does not match X")
        Z = Z[:, feature_mask]
    n, k = Z.shape[0], len(classes)

    # the l1 term is handled by the prox step, so the smooth part is unpenalised
    c_smooth = C if penalty == "l2" else math.inf

    def smooth(W, b):
        gW, gb = logistic_gradient(W, b, Z, idx, c_smooth, "l2")
        return logistic_objective(W, b, Z, idx, c_smooth, "l2"), gW, gb

    l1 = 1.0 / (C * n) if penalty == "l1" else 0.0
    W, b, info = _mfista(smooth, np.zeros((k, Z.shape[1])), np.zeros(k), l1, tol, max_iter)
    if not info["converged"]:
        log.warning("logistic fit stopped after %d iterations, grad norm %.3g",
                    info["n_iter"], info["grad_norm"])
    b = b - b.mean()
    return LinearModel(LOGISTIC, classes, W, b, mean, std, float(C), feature_mask, seed,
                       dict(info, penalty=penalty, n_train=int(n)))


def select_features_l1(X, y, C: float = DEFAULT_C, classes: Optional[Sequence] = None,
                       tol: float = 1e-6, max_iter: int = 10_000) -> np.ndarray:
    """Boolean mask of features with a non-zero weight in any one-vs-rest L1 logistic model."""
    X, idx, classes = _prepare(X, y, classes)
    mean, std = fit_scaler(X)
    Z = (X - mean) / std
    n, p = Z.shape
    mask = np.zeros(p, dtype=bool)
    for k in range(len(classes)):
        t = np.where(idx == k, 1.0, -1.0)

        def smooth(W, b, t=t):
            f, gw, gb = _binary_smooth(W[0], b[0], Z, t, math.inf, "l1")
            return f, gw[None, :], np.array([gb])

        W, _, info = _mfista(smooth, np.zeros((1, p)), np.zeros(1), 1.0 / (C * n), tol, max_iter)
        if not info["converged"]:
            log.warning("L1 selection (class %s) stopped after %d iterations",
                        classes[k], info["n_iter"])
        mask |= np.abs(W[0]) > MASK_THRESHOLD
    return mask
