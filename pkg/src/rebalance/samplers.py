"""Resampling algorithms behind one interface.

Every sampler takes (LabeledDataset, SamplerSpec) and returns a dataset whose
minority count equals the majority count: original rows first and verbatim,
synthetic rows appended with the minority label, all randomness derived from
spec.seed.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import gmm, neighbors, svm
from .data import LabeledDataset

logger = logging.getLogger(__name__)

KINDS = ("none", "ros", "smote", "bsmote1", "bsmote2", "svmsmote", "adasyn", "adaptive_gmm")


@dataclass(frozen=True)
class SamplerSpec:
    """Which resampler to run and its hyperparameters."""

    kind: str = "smote"
    K: int = 5
    r: int = 10
    eta: float = 0.1
    p_t: float = 0.5
    w_t: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; expected one of {KINDS}")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.r < 1:
            raise ValueError("r must be at least 1")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0, 1]")
        if not (0.0 <= self.p_t <= 1.0 and 0.0 <= self.w_t <= 1.0):
            raise ValueError("p_t and w_t must be in [0, 1]")


@dataclass(frozen=True)
class SyntheticPool:
    """Candidate synthetic minority points with their generation provenance.

    Each point equals parent_seed + alpha * (parent_neighbor - parent_seed);
    indices refer to rows of the matrix the generator was given.
    """

    points: np.ndarray
    seed_indices: np.ndarray
    neighbor_indices: np.ndarray
    alphas: np.ndarray
    cluster_of: np.ndarray | None = None

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class ClusterWeighting:
    q: np.ndarray
    w: np.ndarray
    allocation: np.ndarray | None = None


def _clamped_k(K: int, n_minority: int) -> int:
    limit = n_minority - 1
    if K > limit:
        logger.warning("K=%d exceeds minority size - 1; clamping to %d", K, limit)
        return limit
    return K


def _minority_neighbor_table(minority: np.ndarray, K: int) -> np.ndarray:
    """K nearest minority neighbors of each minority row, by row index."""
    tree = neighbors.build(minority)
    return np.stack([neighbors.knn_indices(tree, i, K) for i in range(minority.shape[0])])


def _append_synthetic(d: LabeledDataset, points: np.ndarray) -> LabeledDataset:
    if points.shape[0] == 0:
        return d
    labels = np.concatenate([d.labels, np.full(points.shape[0], d.minority_label, dtype=d.labels.dtype)])
    return LabeledDataset(
        features=np.vstack([d.features, points]),
        labels=labels,
        minority_label=d.minority_label,
        feature_names=d.feature_names,
    )


def _deficit(d: LabeledDataset) -> int:
    return d.majority_count - d.minority_count


def _require_minority(d: LabeledDataset, at_least: int):
    if d.minority_count < at_least:
        raise ValueError(f"need at least {at_least} minority samples, found {d.minority_count}")


def random_oversample(d: LabeledDataset, spec: SamplerSpec) -> LabeledDataset:
    need = _deficit(d)
    if need == 0:
        return d
    rng = np.random.default_rng(spec.seed)
    minority_rows = np.flatnonzero(d.minority_mask)
    picks = rng.choice(minority_rows, size=need, replace=True)
    return _append_synthetic(d, d.features[picks])


def _interpolate(seeds_xy, targets_xy, u):
    return seeds_xy + u[:, None] * (targets_xy - seeds_xy)


def smote(d: LabeledDataset, spec: SamplerSpec) -> LabeledDataset:
    synth, _ = smote_points(d, spec)
    return _append_synthetic(d, synth)


_EMPTY_TRACE = SyntheticPool(
    points=np.empty((0, 0)),
    seed_indices=np.empty(0, dtype=np.int64),
    neighbor_indices=np.empty(0, dtype=np.int64),
    alphas=np.empty(0),
)


def smote_points(d: LabeledDataset, spec: SamplerSpec) -> tuple[np.ndarray, SyntheticPool]:
    """Plain SMOTE generation; returns the points and their provenance
    (indices into the dataset rows)."""
    need = _deficit(d)
    if need == 0:
        return np.empty((0, d.n_features)), _EMPTY_TRACE
    _require_minority(d, 2)
    minority_rows = np.flatnonzero(d.minority_mask)
    minority = d.features[minority_rows]
    N = len(minority_rows)
    K = _clamped_k(spec.K, N)
    table = _minority_neighbor_table(minority, K)

    rng = np.random.default_rng(spec.seed)
    seed_local = np.arange(need) % N
    nbr_local = table[seed_local, rng.integers(0, K, size=need)]
    u = rng.random(need)
    points = _interpolate(minority[seed_local], minority[nbr_local], u)
    trace = SyntheticPool(
        points=points,
        seed_indices=minority_rows[seed_local],
        neighbor_indices=minority_rows[nbr_local],
        alphas=u,
    )
    return points, trace


def _dataset_neighbor_table(d: LabeledDataset, rows: np.ndarray, K: int) -> np.ndarray:
    """K nearest neighbors over the full dataset for each row in `rows`."""
    tree = neighbors.build(d.features)
    return np.stack([neighbors.knn_indices(tree, int(i), K) for i in rows])


def classify_minority_roles(d: LabeledDataset, K: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split minority rows into (safe, danger, noisy) by majority presence
    among their K nearest neighbors in the full dataset."""
    minority_rows = np.flatnonzero(d.minority_mask)
    K_full = min(K, d.n_samples - 1)
    table = _dataset_neighbor_table(d, minority_rows, K_full)
    majority_mask = ~d.minority_mask
    m_prime = majority_mask[table].sum(axis=1)
    noisy = minority_rows[m_prime == K_full]
    danger = minority_rows[(m_prime >= K_full / 2.0) & (m_prime < K_full)]
    safe = minority_rows[m_prime < K_full / 2.0]
    return safe, danger, noisy


def borderline_smote(d: LabeledDataset, spec: SamplerSpec, variant: int) -> LabeledDataset:
    synth, _ = borderline_smote_points(d, spec, variant)
    return _append_synthetic(d, synth)


def borderline_smote_points(
    d: LabeledDataset, spec: SamplerSpec, variant: int
) -> tuple[np.ndarray, SyntheticPool]:
    """Borderline SMOTE: only "danger" minority points seed generation.

    Variant 1 interpolates toward same-class nearest neighbors; variant 2 also
    draws targets from the seed's full-data neighborhood, with the step halved
    when the target is a majority point.
    """
    if variant not in (1, 2):
        raise ValueError("variant must be 1 or 2")
    need = _deficit(d)
    if need == 0:
        return np.empty((0, d.n_features)), _EMPTY_TRACE
    _require_minority(d, 2)
    _, danger, _ = classify_minority_roles(d, spec.K)
    if len(danger) == 0:
        logger.warning("no danger minority points; falling back to plain SMOTE")
        return smote_points(d, spec)

    minority_rows = np.flatnonzero(d.minority_mask)
    minority = d.features[minority_rows]
    N = len(minority_rows)
    K = _clamped_k(spec.K, N)
    minority_table = _minority_neighbor_table(minority, K)
    local_of = {int(row): i for i, row in enumerate(minority_rows)}

    rng = np.random.default_rng(spec.seed)
    seed_rows = danger[np.arange(need) % len(danger)]
    if variant == 1:
        seed_local = np.asarray([local_of[int(r)] for r in seed_rows])
        nbr_local = minority_table[seed_local, rng.integers(0, K, size=need)]
        target_rows = minority_rows[nbr_local]
        u = rng.random(need)
    else:
        K_full = min(spec.K, d.n_samples - 1)
        full_table = _dataset_neighbor_table(d, danger, K_full)
        pos_of = {int(r): i for i, r in enumerate(danger)}
        seed_pos = np.asarray([pos_of[int(r)] for r in seed_rows])
        target_rows = full_table[seed_pos, rng.integers(0, K_full, size=need)]
        u = rng.random(need)
        toward_majority = ~d.minority_mask[target_rows]
        u = np.where(toward_majority, u * 0.5, u)

    points = _interpolate(d.features[seed_rows], d.features[target_rows], u)
    trace = SyntheticPool(points=points, seed_indices=seed_rows, neighbor_indices=target_rows, alphas=u)
    return points, trace


def adasyn(d: LabeledDataset, spec: SamplerSpec) -> LabeledDataset:
    synth, _ = adasyn_points(d, spec)
    return _append_synthetic(d, synth)


def adasyn_points(d: LabeledDataset, spec: SamplerSpec) -> tuple[np.ndarray, SyntheticPool]:
    """ADASYN: per-seed synthetic counts proportional to local majority density."""
    need = _deficit(d)
    if need == 0:
        return np.empty((0, d.n_features)), _EMPTY_TRACE
    _require_minority(d, 2)
    minority_rows = np.flatnonzero(d.minority_mask)
    minority = d.features[minority_rows]
    N = len(minority_rows)

    K_full = min(spec.K, d.n_samples - 1)
    full_table = _dataset_neighbor_table(d, minority_rows, K_full)
    ratios = (~d.minority_mask)[full_table].sum(axis=1) / K_full
    if ratios.sum() == 0.0:
        logger.warning("no majority presence in any minority neighborhood; allocating uniformly")
        per_seed = allocate_counts(np.ones(N), need)
    else:
        per_seed = allocate_counts(ratios / ratios.sum(), need)

    K = _clamped_k(spec.K, N)
    minority_table = _minority_neighbor_table(minority, K)
    rng = np.random.default_rng(spec.seed)
    seed_local = np.repeat(np.arange(N), per_seed)
    nbr_local = minority_table[seed_local, rng.integers(0, K, size=need)]
    u = rng.random(need)
    points = _interpolate(minority[seed_local], minority[nbr_local], u)
    trace = SyntheticPool(
        points=points,
        seed_indices=minority_rows[seed_local],
        neighbor_indices=minority_rows[nbr_local],
        alphas=u,
    )
    return points, trace


def svm_smote(d: LabeledDataset, spec: SamplerSpec) -> LabeledDataset:
    """SMOTE seeded at minority support vectors of an RBF SVM trained on d.

    Support vectors in majority-dominated neighborhoods interpolate toward
    minority neighbors; the rest extrapolate outward with the step bounded to
    half the neighbor distance.
    """
    need = _deficit(d)
    if need == 0:
        return d
    _require_minority(d, 2)
    y = np.where(d.minority_mask, 1.0, -1.0)
    model = svm.train(d.features, y, C_reg=1.0, gamma="scale")
    sv_minority = model.support_indices[d.minority_mask[model.support_indices]]
    if len(sv_minority) == 0:
        logger.warning("no minority support vectors; falling back to plain SMOTE")
        return smote(d, spec)

    minority_rows = np.flatnonzero(d.minority_mask)
    minority = d.features[minority_rows]
    N = len(minority_rows)
    K = _clamped_k(spec.K, N)
    minority_table = _minority_neighbor_table(minority, K)
    local_of = {int(row): i for i, row in enumerate(minority_rows)}

    K_full = min(spec.K, d.n_samples - 1)
    full_table = _dataset_neighbor_table(d, sv_minority, K_full)
    majority_dominated = (~d.minority_mask)[full_table].sum(axis=1) > K_full / 2.0

    rng = np.random.default_rng(spec.seed)
    seed_pos = np.arange(need) % len(sv_minority)
    seed_rows = sv_minority[seed_pos]
    seed_local = np.asarray([local_of[int(r)] for r in seed_rows])
    nbr_local = minority_table[seed_local, rng.integers(0, K, size=need)]
    u = rng.random(need)
    step = np.where(majority_dominated[seed_pos], u, -0.5 * u)
    points = _interpolate(minority[seed_local], minority[nbr_local], step)
    return _append_synthetic(d, points)


def smote_grid_generate(minority: np.ndarray, K: int, r: int) -> SyntheticPool:
    """Step 1 of the adaptive pipeline: a deterministic oversized candidate pool.

    For every minority sample and each of its K minority neighbors, emit the r
    evenly spaced points stepping toward the neighbor (alpha = 1/r ... r/r).
    Points that exactly duplicate an earlier pool point or an original
    minority sample are dropped, so the alpha = 1 endpoint never inflates
    the pool.
    """
    minority = np.asarray(minority, dtype=np.float64)
    N = minority.shape[0]
    if N < 2:
        raise ValueError("need at least 2 minority samples to interpolate")
    if K < 1 or r < 1:
        raise ValueError("K and r must be at least 1")
    K = _clamped_k(K, N)
    table = _minority_neighbor_table(minority, K)

    alphas = np.arange(1, r + 1, dtype=np.float64) / r
    seed_idx = np.repeat(np.arange(N), K * r)
    nbr_idx = np.repeat(table.reshape(-1), r)
    alpha_col = np.tile(alphas, N * K)
    points = _interpolate(minority[seed_idx], minority[nbr_idx], alpha_col)

    seen = {row.tobytes() for row in minority}
    keep = np.zeros(len(points), dtype=bool)
    for i, row in enumerate(points):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep[i] = True
    return SyntheticPool(
        points=points[keep],
        seed_indices=seed_idx[keep],
        neighbor_indices=nbr_idx[keep],
        alphas=alpha_col[keep],
    )


def cluster_weights(
    model: gmm.GmmModel, majority: np.ndarray, p_t: float, w_t: float, M: int
) -> ClusterWeighting:
    """Step 3 weighting: clusters crowded by high-posterior majority samples
    get weight 0; the rest get 1 - q/M."""
    resp = gmm.responsibility_matrix(model, majority)
    q = (resp > p_t).sum(axis=0)
    v = 1.0 - q / M
    w = np.where(v > w_t, v, 0.0)
    return ClusterWeighting(q=q, w=w)


def allocate_counts(w: np.ndarray, total: int, eligible: np.ndarray | None = None) -> np.ndarray:
    """Split `total` into integer counts proportional to `w` by largest-remainder
    rounding (ties to the lower index). All-zero weights fall back to a uniform
    split over `eligible` entries."""
    w = np.asarray(w, dtype=np.float64)
    if total < 0:
        raise ValueError("total must be non-negative")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    counts = np.zeros(len(w), dtype=np.int64)
    if total == 0 or len(w) == 0:
        return counts
    if w.sum() == 0.0:
        mask = np.ones(len(w), dtype=bool) if eligible is None else np.asarray(eligible, dtype=bool)
        if not mask.any():
            raise ValueError("all weights are zero and no entry is eligible for fallback")
        logger.warning("all cluster weights are zero; allocating uniformly over %d clusters", mask.sum())
        w = mask.astype(np.float64)
    quotas = total * w / w.sum()
    base = np.floor(quotas).astype(np.int64)
    remainder = total - int(base.sum())
    fractions = quotas - base
    order = np.lexsort((np.arange(len(w)), -fractions))
    base[order[:remainder]] += 1
    return base


def _select_from_clusters(
    pool: SyntheticPool,
    weighting: ClusterWeighting,
    need: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw `need` pool indices cluster by cluster, honoring the allocation and
    redistributing shortfalls; falls back to replacement draws if the whole
    pool is too small."""
    C = len(weighting.w)
    members = [np.flatnonzero(pool.cluster_of == c) for c in range(C)]
    occupancy = np.asarray([len(m) for m in members])
    wanted = allocate_counts(weighting.w, need, eligible=occupancy > 0)

    chosen: list[np.ndarray] = []
    unpicked = [m.copy() for m in members]
    remaining_w = weighting.w.copy()
    while True:
        shortfall = 0
        for c in range(C):
            take = min(int(wanted[c]), len(unpicked[c]))
            if take > 0:
                picked = rng.choice(unpicked[c], size=take, replace=False)
                chosen.append(picked)
                keep = ~np.isin(unpicked[c], picked)
                unpicked[c] = unpicked[c][keep]
            shortfall += int(wanted[c]) - take
        if shortfall == 0:
            break
        capacity = np.asarray([len(u) for u in unpicked])
        if not (capacity > 0).any():
            break
        logger.warning("redistributing %d samples from exhausted clusters", shortfall)
        remaining_w = np.where(capacity > 0, remaining_w, 0.0)
        wanted = allocate_counts(remaining_w, shortfall, eligible=capacity > 0)

    selected = np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)
    missing = need - len(selected)
    if missing > 0:
        logger.warning(
            "synthetic pool (%d points) smaller than the %d needed; sampling %d with replacement",
            len(pool), need, missing,
        )
        extra = rng.choice(len(pool), size=missing, replace=True)
        selected = np.concatenate([selected, extra])
    return selected


def adaptive_gmm_resample(d: LabeledDataset, spec: SamplerSpec) -> LabeledDataset:
    """Three-step adaptive oversampler.

    1. Build an oversized pool of grid-interpolated minority candidates.
    2. Cluster original + pool points with a GMM sized from the class deficit.
    3. Weight clusters by how free they are of high-posterior majority samples,
       then draw the deficit from the pool proportionally to those weights.
    """
    need = _deficit(d)
    if need == 0:
        return d
    _require_minority(d, 2)
    minority = d.minority_features()
    majority = d.majority_features()
    M, N = d.majority_count, d.minority_count

    pool = smote_grid_generate(minority, spec.K, spec.r)
    if len(pool) == 0:
        raise ValueError("cannot synthesize from zero-variance minority class")

    root = np.random.SeedSequence([spec.seed, 7])
    em_seed_seq, select_seq = root.spawn(2)
    em_cfg = gmm.EmConfig(seed=int(em_seed_seq.generate_state(1)[0]))
    C = int(np.clip(int(round(need * spec.eta)), 1, N + len(pool)))
    model = gmm.fit(np.vstack([minority, pool.points]), C, em_cfg)
    pool = replace(pool, cluster_of=gmm.hard_assign(model, pool.points))

    weighting = cluster_weights(model, majority, spec.p_t, spec.w_t, M)
    rng = np.random.default_rng(select_seq)
    selected = _select_from_clusters(pool, weighting, need, rng)
    return _append_synthetic(d, pool.points[selected])


_DISPATCH = {
    "none": lambda d, spec: d,
    "ros": random_oversample,
    "smote": smote,
    "bsmote1": lambda d, spec: borderline_smote(d, spec, 1),
    "bsmote2": lambda d, spec: borderline_smote(d, spec, 2),
    "svmsmote": svm_smote,
    "adasyn": adasyn,
    "adaptive_gmm": adaptive_gmm_resample,
}


def resample(d: LabeledDataset, spec: SamplerSpec) -> LabeledDataset:
    """Run the sampler named by spec.kind."""
    return _DISPATCH[spec.kind](d, spec)
