"""RBF-kernel soft-margin SVM trained by sequential minimal optimization.

Pair selection is a deterministic first-violator scan (no randomized
heuristics), so training the same data twice yields the same model.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

KERNEL_CACHE_BYTES = 64 << 20
_MIN_STEP = 1e-12


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coefficients: np.ndarray  # alpha_i * y_i, nonzero entries only
    bias: float
    gamma: float
    C_reg: float
    support_indices: np.ndarray = None  # rows of the training matrix


class _KernelCache:
    """RBF kernel rows against the training set, bounded at 64 MB with LRU eviction."""

    def __init__(self, X: np.ndarray, gamma: float, max_bytes: int = KERNEL_CACHE_BYTES):
        self.X = X
        self.gamma = gamma
        n = X.shape[0]
        self.sq_norms = np.einsum("ij,ij->i", X, X)
        if n * n * 8 <= max_bytes:
            d2 = self.sq_norms[:, None] + self.sq_norms[None, :] - 2.0 * (X @ X.T)
            np.maximum(d2, 0.0, out=d2)
            self.full = np.exp(-gamma * d2)
            self.rows = None
        else:
            self.full = None
            self.rows: OrderedDict[int, np.ndarray] = OrderedDict()
            self.max_rows = max(2, max_bytes // (8 * n))

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        cached = self.rows.get(i)
        if cached is not None:
            self.rows.move_to_end(i)
            return cached
        d2 = self.sq_norms + self.sq_norms[i] - 2.0 * (self.X @ self.X[i])
        np.maximum(d2, 0.0, out=d2)
        row = np.exp(-self.gamma * d2)
        self.rows[i] = row
        if len(self.rows) > self.max_rows:
            self.rows.popitem(last=False)
        return row


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    a2 = np.einsum("ij,ij->i", A, A)[:, None]
    b2 = np.einsum("ij,ij->i", B, B)[None, :]
    d2 = a2 + b2 - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def resolve_gamma(X: np.ndarray, gamma) -> float:
    if gamma == "scale":
        variance = float(X.var())
        if variance == 0.0:
            variance = 1.0
        return 1.0 / (X.shape[1] * variance)
    value = float(gamma)
    if value <= 0.0:
        raise ValueError("gamma must be positive")
    return value


def train(
    X: np.ndarray,
    y: np.ndarray,
    C_reg: float = 1.0,
    gamma="scale",
    tol: float = 1e-3,
    max_passes: int = 10,
    max_sweeps: int = 10_000,
) -> SvmModel:
    """SMO over the dual with kernel exp(-gamma * ||a-b||^2).

    The outer loop sweeps all indices in order; each KKT violator pairs with
    the index maximizing |E_i - E_j| (ordered scan as fallback). Stops after
    ``max_passes`` consecutive sweeps without an update.
    """
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 training samples")
    if y.shape != (n,):
        raise ValueError("y length must match X rows")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1/+1")
    if len(set(y.tolist())) < 2:
        raise ValueError("both classes must be present")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")

    gamma_value = resolve_gamma(X, gamma)
    kernel = _KernelCache(X, gamma_value)

    alphas = np.zeros(n)
    bias = 0.0
    errors = -y.copy()  # f(x) = 0 initially, so E_i = -y_i

    def pick_partner(i: int, row_i: np.ndarray) -> int:
        """The feasible partner with the largest |E_i - E_j| (ties to the
        lower index); -1 when no pair with i can make progress."""
        a_i = alphas[i]
        same = y == y[i]
        low = np.maximum(np.where(same, alphas + a_i - C_reg, alphas - a_i), 0.0)
        high = np.minimum(np.where(same, alphas + a_i, C_reg + alphas - a_i), C_reg)
        eta = 2.0 * (1.0 - row_i)  # RBF diagonal is 1
        with np.errstate(divide="ignore", invalid="ignore"):
            target = alphas + y * (errors[i] - errors) / eta
        clipped = np.clip(target, low, high)
        feasible = (low < high) & (eta > 0.0) & (np.abs(clipped - alphas) >= _MIN_STEP)
        feasible[i] = False
        if not feasible.any():
            return -1
        gaps = np.where(feasible, np.abs(errors[i] - errors), -1.0)
        return int(np.argmax(gaps))

    def take_step(i: int, j: int):
        nonlocal bias, errors
        a_i, a_j = alphas[i], alphas[j]
        if y[i] != y[j]:
            low, high = max(0.0, a_j - a_i), min(C_reg, C_reg + a_j - a_i)
        else:
            low, high = max(0.0, a_i + a_j - C_reg), min(C_reg, a_i + a_j)
        row_i, row_j = kernel.row(i), kernel.row(j)
        eta = row_i[i] + row_j[j] - 2.0 * row_i[j]
        a_j_new = a_j + y[j] * (errors[i] - errors[j]) / eta
        a_j_new = min(high, max(low, a_j_new))
        a_i_new = a_i + y[i] * y[j] * (a_j - a_j_new)
        d_i, d_j = a_i_new - a_i, a_j_new - a_j
        b1 = bias - errors[i] - y[i] * d_i * row_i[i] - y[j] * d_j * row_i[j]
        b2 = bias - errors[j] - y[i] * d_i * row_i[j] - y[j] * d_j * row_j[j]
        if 0.0 < a_i_new < C_reg:
            bias_new = b1
        elif 0.0 < a_j_new < C_reg:
            bias_new = b2
        else:
            bias_new = 0.5 * (b1 + b2)
        alphas[i], alphas[j] = a_i_new, a_j_new
        errors += y[i] * d_i * row_i + y[j] * d_j * row_j + (bias_new - bias)
        bias = bias_new

    clean_passes = 0
    sweeps = 0
    while clean_passes < max_passes and sweeps < max_sweeps:
        changed = 0
        for i in range(n):
            r = errors[i] * y[i]
            violates = (r < -tol and alphas[i] < C_reg) or (r > tol and alphas[i] > 0.0)
            if not violates:
                continue
            j = pick_partner(i, kernel.row(i))
            if j >= 0:
                take_step(i, j)
                changed += 1
        sweeps += 1
        clean_passes = clean_passes + 1 if changed == 0 else 0
    if sweeps >= max_sweeps:
        logger.warning("SMO hit the sweep cap (%d) before a clean pass", max_sweeps)

    alphas[alphas < 1e-14 * C_reg] = 0.0  # float dust from i-side updates
    support = np.flatnonzero(alphas != 0.0)
    return SvmModel(
        support_vectors=X[support].copy(),
        dual_coefficients=alphas[support] * y[support],
        bias=bias,
        gamma=gamma_value,
        C_reg=C_reg,
        support_indices=support,
    )


def decision_function(model: SvmModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.support_vectors.shape[1]:
        raise ValueError(
            f"dimension mismatch: model expects {model.support_vectors.shape[1]} features"
        )
    K = rbf_kernel(X, model.support_vectors, model.gamma)
    return K @ model.dual_coefficients + model.bias


def predict(model: SvmModel, X: np.ndarray) -> np.ndarray:
    margins = decision_function(model, X)
    return np.where(margins >= 0.0, 1.0, -1.0)


def dual_objective(model: SvmModel) -> float:
    """Value of the dual objective at the trained coefficients."""
    coef = model.dual_coefficients
    K = rbf_kernel(model.support_vectors, model.support_vectors, model.gamma)
    return float(np.abs(coef).sum() - 0.5 * coef @ K @ coef)
