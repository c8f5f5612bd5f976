"""Gaussian mixture fitting by expectation-maximization, with posterior queries.

Full covariances with a diagonal regularization floor applied at every
M-step; log-space density evaluation throughout.
"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

_LOG_2PI = float(np.log(2.0 * np.pi))
_EMPTY_RESP = 1e-10


def _logsumexp_rows(matrix: np.ndarray) -> np.ndarray:
    peak = matrix.max(axis=1)
    return peak + np.log(np.exp(matrix - peak[:, None]).sum(axis=1))


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 200
    tol: float = 1e-6
    reg_floor: float = 1e-6
    n_init: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1 or self.n_init < 1:
            raise ValueError("max_iters and n_init must be positive")
        if self.tol <= 0 or self.reg_floor <= 0:
            raise ValueError("tol and reg_floor must be positive")


@dataclass(frozen=True)
class GmmModel:
    """Fitted mixture; immutable and safe to query concurrently."""

    C: int
    mixing_weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    converged: bool
    final_log_likelihood: float
    log_likelihood_trace: np.ndarray
    reseed_steps: tuple[int, ...] = ()


# cap on floats per (component-block x points x dims) temporary
_BLOCK_FLOATS = 2e7


def _cholesky_factors(covariances: np.ndarray, reg_floor: float) -> np.ndarray:
    """Stacked lower Cholesky factors, bumping the diagonal if a matrix is
    numerically indefinite."""
    try:
        return np.linalg.cholesky(covariances)
    except np.linalg.LinAlgError:
        pass
    d = covariances.shape[-1]
    factors = np.empty_like(covariances)
    for c, cov in enumerate(covariances):
        bump = 0.0
        for _ in range(8):
            try:
                factors[c] = np.linalg.cholesky(cov + bump * np.eye(d))
                break
            except np.linalg.LinAlgError:
                bump = max(reg_floor, 1e-12) if bump == 0.0 else bump * 10.0
        else:
            raise np.linalg.LinAlgError("covariance not positive definite after regularization")
    return factors


def _component_blocks(C: int, n: int, d: int):
    block = max(1, int(_BLOCK_FLOATS / max(n * d, 1)))
    for start in range(0, C, block):
        yield start, min(start + block, C)


def _log_densities(points: np.ndarray, means: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """Componentwise log N(x; mu_c, Sigma_c) for all points; shape (n, C)."""
    n, d = points.shape
    C = len(means)
    inv = np.linalg.inv(factors)  # (C, d, d), inverse of lower-triangular
    log_det = 2.0 * np.log(np.diagonal(factors, axis1=1, axis2=2)).sum(axis=1)
    out = np.empty((n, C))
    for lo, hi in _component_blocks(C, n, d):
        diffs = points[None, :, :] - means[lo:hi, None, :]
        z = np.matmul(diffs, inv[lo:hi].transpose(0, 2, 1))
        quad = np.square(z).sum(axis=2)
        out[:, lo:hi] = (-0.5 * (d * _LOG_2PI + log_det[lo:hi, None] + quad)).T
    return out


def _kmeanspp_means(points: np.ndarray, C: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, C):
        total = d2.sum()
        if total <= 0.0:
            chosen.append(int(rng.integers(n)))
        else:
            pick = int(rng.choice(n, p=d2 / total))
            chosen.append(pick)
            d2 = np.minimum(d2, ((points - points[pick]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _run_em(points: np.ndarray, C: int, cfg: EmConfig, rng: np.random.Generator):
    n, d = points.shape
    data_cov = np.cov(points, rowvar=False, bias=True).reshape(d, d)
    base_cov = data_cov + cfg.reg_floor * np.eye(d)

    weights = np.full(C, 1.0 / C)
    means = _kmeanspp_means(points, C, rng)
    covs = np.repeat(base_cov[None, :, :], C, axis=0)

    trace = []
    reseeds = []
    converged = False
    just_reseeded = False
    for iteration in range(cfg.max_iters):
        factors = _cholesky_factors(covs, cfg.reg_floor)
        log_joint = _log_densities(points, means, factors) + np.log(weights)
        log_norm = _logsumexp_rows(log_joint)
        ll = float(log_norm.sum())
        resp = np.exp(log_joint - log_norm[:, None])

        if trace and not just_reseeded:
            prev = trace[-1]
            rel = (ll - prev) / max(abs(prev), 1e-12)
            if rel < cfg.tol:
                trace.append(ll)
                converged = True
                break
        trace.append(ll)
        just_reseeded = False

        totals = resp.sum(axis=0)
        starved = np.flatnonzero(totals < _EMPTY_RESP)
        if len(starved):
            # park each starved component on the worst-explained point so the
            # component count stays fixed
            reseeds.append(iteration)
            just_reseeded = True
            worst = np.argsort(resp.max(axis=1))
            for slot, comp in enumerate(starved):
                point = points[worst[slot % n]]
                means[comp] = point
                covs[comp] = base_cov
                weights[comp] = 1.0 / n
            weights = weights / weights.sum()
            continue

        weights = totals / n
        means = (resp.T @ points) / totals[:, None]
        reg_eye = cfg.reg_floor * np.eye(d)
        for lo, hi in _component_blocks(C, n, d):
            diffs = points[None, :, :] - means[lo:hi, None, :]
            weighted = resp.T[lo:hi, :, None] * diffs
            covs[lo:hi] = np.matmul(weighted.transpose(0, 2, 1), diffs)
            covs[lo:hi] /= totals[lo:hi, None, None]
            covs[lo:hi] += reg_eye

    return {
        "weights": weights,
        "means": means,
        "covs": covs,
        "trace": np.asarray(trace),
        "converged": converged,
        "reseeds": tuple(reseeds),
    }


def fit(points: np.ndarray, C: int, cfg: EmConfig = EmConfig()) -> GmmModel:
    """Fit a C-component mixture; best log-likelihood over seeded restarts wins.

    C is clamped to the number of points (with a warning) because callers size
    it from majority/minority counts that can exceed small sample sets.
    """
    points = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("need a non-empty 2-D point matrix")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    if C < 1:
        raise ValueError("C must be at least 1")
    n = points.shape[0]
    if C > n:
        logger.warning("requested %d components for %d points; clamping to %d", C, n, n)
        C = n

    best = None
    for restart in range(cfg.n_init):
        rng = np.random.default_rng([cfg.seed, restart])
        result = _run_em(points, C, cfg, rng)
        if best is None or result["trace"][-1] > best["trace"][-1]:
            best = result
    return GmmModel(
        C=C,
        mixing_weights=best["weights"],
        means=best["means"],
        covariances=best["covs"],
        converged=best["converged"],
        final_log_likelihood=float(best["trace"][-1]),
        log_likelihood_trace=best["trace"],
        reseed_steps=best["reseeds"],
    )


def responsibility_matrix(model: GmmModel, points: np.ndarray) -> np.ndarray:
    """Posterior component probabilities for each row; rows sum to 1."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("expected a 2-D point matrix")
    if points.shape[1] != model.means.shape[1]:
        raise ValueError(
            f"dimension mismatch: model is {model.means.shape[1]}-D, points are {points.shape[1]}-D"
        )
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    factors = _cholesky_factors(model.covariances, 1e-12)
    log_joint = _log_densities(points, model.means, factors) + np.log(model.mixing_weights)
    return np.exp(log_joint - _logsumexp_rows(log_joint)[:, None])


def responsibilities(model: GmmModel, x: np.ndarray) -> np.ndarray:
    return responsibility_matrix(model, np.asarray(x, dtype=np.float64)[None, :])[0]


def hard_assign(model: GmmModel, points: np.ndarray) -> np.ndarray:
    """Most responsible component per point; ties resolve to the lower index."""
    return np.argmax(responsibility_matrix(model, points), axis=1)
