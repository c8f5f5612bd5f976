"""Dataset ingestion, standardization, splitting, and synthetic data generation."""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

# Clover geometry constants. The 5-petal rose envelope is an approximation of
# the third-party noisy/borderline benchmark family: only the qualitative
# regime matters (class overlap at petal borders, IR 5, relocatable border
# noise), not the exact point coordinates.
CLOVER_PETAL_RADIUS = 0.3
CLOVER_ANNULUS_WIDTH = 0.05
_CLOVER_CENTER = (0.5, 0.5)


class KeelFormatError(ValueError):
    """Malformed Keel header or data section; carries the offending line number."""

    def __init__(self, message, line_number):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class LabeledDataset:
    """A dense binary-labeled feature matrix with a designated minority class.

    Immutable after construction; safe to share across threads.
    """

    features: np.ndarray
    labels: np.ndarray
    minority_label: object
    feature_names: list[str] | None = None

    def __post_init__(self):
        features = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labels = np.asarray(self.labels)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if features.shape[0] < 2:
            raise ValueError("need at least 2 samples")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels length must match the number of rows")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite (no NaN/inf, no missing values)")
        classes = sorted(set(labels.tolist()), key=str)
        if len(classes) != 2:
            raise ValueError(f"expected binary labels, found {len(classes)} classes")
        if self.minority_label not in classes:
            raise ValueError(f"minority_label {self.minority_label!r} not present in labels")
        if self.minority_count > self.majority_count:
            raise ValueError("designated minority class outnumbers the other class")
        if self.feature_names is not None and len(self.feature_names) != features.shape[1]:
            raise ValueError("feature_names length must match the number of columns")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def majority_label(self):
        for value in set(self.labels.tolist()):
            if value != self.minority_label:
                return value
        raise AssertionError("binary invariant violated")

    @property
    def minority_mask(self) -> np.ndarray:
        return self.labels == self.minority_label

    @property
    def minority_count(self) -> int:
        return int(np.count_nonzero(self.labels == self.minority_label))

    @property
    def majority_count(self) -> int:
        return self.n_samples - self.minority_count

    @property
    def imbalance_ratio(self) -> float:
        return self.majority_count / self.minority_count

    def minority_features(self) -> np.ndarray:
        return self.features[self.minority_mask]

    def majority_features(self) -> np.ndarray:
        return self.features[~self.minority_mask]

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        """Row subset; keeps the minority designation of the parent dataset."""
        return LabeledDataset(
            features=self.features[indices],
            labels=self.labels[indices],
            minority_label=self.minority_label,
            feature_names=self.feature_names,
        )


@dataclass(frozen=True)
class Standardizer:
    """Per-feature shift/scale fitted on training data; zero stds replaced by one."""

    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class FoldPlan:
    """Stratified k-fold assignment: test sets partition the index set."""

    k: int
    assignments: list[tuple[np.ndarray, np.ndarray]]
    seed: int


def _pick_minority_label(labels, positive_label):
    classes = sorted(set(labels.tolist()), key=str)
    if len(classes) != 2:
        raise ValueError(f"expected binary labels, found {len(classes)} classes: {classes}")
    a, b = classes
    count_a = int(np.count_nonzero(labels == a))
    count_b = len(labels) - count_a
    if count_a < count_b:
        return a
    if count_b < count_a:
        return b
    if positive_label is None:
        raise ValueError("class sizes are tied; pass positive_label to break the tie")
    if positive_label not in classes:
        raise ValueError(f"positive_label {positive_label!r} not among classes {classes}")
    return positive_label


def load_keel(path, positive_label=None) -> LabeledDataset:
    """Parse a Keel ``.dat`` file into a LabeledDataset.

    The class attribute is the last ``@attribute`` unless ``@outputs`` names
    one explicitly. All input attributes must be numeric. The minority label
    is the rarer class; a tie requires ``positive_label``.
    """
    attr_names: list[str] = []
    attr_kinds: dict[str, bool] = {}  # name -> is_numeric
    outputs: list[str] | None = None
    inputs: list[str] | None = None
    rows: list[list[str]] = []
    in_data = False
    lineno = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if in_data:
                rows.append([cell.strip() for cell in line.split(",")])
                continue
            lowered = line.lower()
            if lowered.startswith("@relation"):
                continue
            if lowered.startswith("@attribute"):
                body = line[len("@attribute"):].strip()
                if not body:
                    raise KeelFormatError("@attribute without a name", lineno)
                if body.startswith("'"):
                    end = body.find("'", 1)
                    if end < 0:
                        raise KeelFormatError("unterminated quoted attribute name", lineno)
                    name = body[1:end]
                    rest = body[end + 1:].strip()
                else:
                    parts = body.split(None, 1)
                    name = parts[0]
                    rest = parts[1] if len(parts) > 1 else ""
                    # names like "Class{a,b}" carry the domain without a space
                    if "{" in name:
                        brace = name.index("{")
                        rest = name[brace:] + rest
                        name = name[:brace]
                attr_names.append(name)
                attr_kinds[name] = not rest.lstrip().startswith("{")
                continue
            if lowered.startswith("@inputs"):
                inputs = [s.strip() for s in line[len("@inputs"):].strip().split(",") if s.strip()]
                continue
            if lowered.startswith("@outputs") or lowered.startswith("@output"):
                key = "@outputs" if lowered.startswith("@outputs") else "@output"
                outputs = [s.strip() for s in line[len(key):].strip().split(",") if s.strip()]
                continue
            if lowered.startswith("@data"):
                in_data = True
                continue
            raise KeelFormatError(f"unrecognized header line {line!r}", lineno)
    if not in_data:
        raise KeelFormatError("missing @data section", lineno)
    if not attr_names:
        raise KeelFormatError("no @attribute declarations before @data", 0)

    if outputs:
        if len(outputs) != 1:
            raise ValueError("unsupported dataset: multiple output attributes")
        class_attr = outputs[0]
        if class_attr not in attr_names:
            raise ValueError(f"@outputs names unknown attribute {class_attr!r}")
    else:
        class_attr = attr_names[-1]
    if inputs is not None:
        input_attrs = inputs
        for name in input_attrs:
            if name not in attr_names:
                raise ValueError(f"@inputs names unknown attribute {name!r}")
    else:
        input_attrs = [n for n in attr_names if n != class_attr]
    for name in input_attrs:
        if not attr_kinds.get(name, True):
            raise ValueError(f"unsupported attribute: input {name!r} is not numeric")

    col_of = {name: i for i, name in enumerate(attr_names)}
    feat_cols = [col_of[n] for n in input_attrs]
    label_col = col_of[class_attr]
    features = np.empty((len(rows), len(feat_cols)), dtype=np.float64)
    labels = []
    for i, cells in enumerate(rows):
        if len(cells) != len(attr_names):
            raise KeelFormatError(
                f"expected {len(attr_names)} fields, found {len(cells)}", i + 1
            )
        for j, col in enumerate(feat_cols):
            try:
                features[i, j] = float(cells[col])
            except ValueError:
                raise ValueError(
                    f"unsupported attribute: non-numeric value {cells[col]!r} "
                    f"in column {attr_names[col]!r}"
                ) from None
        labels.append(cells[label_col])
    labels = np.asarray(labels)
    minority = _pick_minority_label(labels, positive_label)
    return LabeledDataset(features, labels, minority, feature_names=list(input_attrs))


def load_csv(path, label_column, positive_label=None) -> LabeledDataset:
    """Load a CSV of numeric feature columns plus one label column.

    ``label_column`` may be a column name (requires a header row) or an
    integer index (headerless file). Ties in class size break toward
    ``positive_label``.
    """
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        table = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not table:
        raise ValueError(f"{path}: empty CSV")
    if isinstance(label_column, str):
        header = [cell.strip() for cell in table[0]]
        if label_column not in header:
            raise ValueError(f"missing column {label_column!r}; header is {header}")
        label_idx = header.index(label_column)
        names = [n for i, n in enumerate(header) if i != label_idx]
        body = table[1:]
    else:
        label_idx = int(label_column)
        width = len(table[0])
        if label_idx < 0:
            label_idx += width
        if not 0 <= label_idx < width:
            raise ValueError(f"missing column: index {label_column} out of range for width {width}")
        names = None
        body = table
    if not body:
        raise ValueError(f"{path}: no data rows")
    n_features = len(body[0]) - 1
    features = np.empty((len(body), n_features), dtype=np.float64)
    labels = []
    for i, row in enumerate(body):
        cells = [c.strip() for c in row]
        if len(cells) != n_features + 1:
            raise ValueError(f"row {i + 1}: expected {n_features + 1} fields, found {len(cells)}")
        j = 0
        for col, cell in enumerate(cells):
            if col == label_idx:
                labels.append(cell)
                continue
            try:
                features[i, j] = float(cell)
            except ValueError:
                raise ValueError(f"row {i + 1}: non-numeric cell {cell!r}") from None
            j += 1
    labels = np.asarray(labels)
    minority = _pick_minority_label(labels, positive_label)
    return LabeledDataset(features, labels, minority, feature_names=names)


def save_csv(dataset: LabeledDataset, path, label_column="label") -> None:
    """Write features + labels with a header; floats use round-trip repr."""
    names = dataset.feature_names or [f"x{i}" for i in range(dataset.n_features)]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([*names, label_column])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [str(label)])


def fit_standardizer(train: LabeledDataset) -> Standardizer:
    # compensated two-pass mean: keeps constant columns exactly centered even
    # at large magnitudes, where a single-pass mean picks up rounding error
    mean = train.features.mean(axis=0)
    mean = mean + (train.features - mean).mean(axis=0)
    centered = train.features - mean
    std = np.sqrt((centered ** 2).mean(axis=0))
    std = np.where(std == 0.0, 1.0, std)
    return Standardizer(mean=mean, std=std)


def apply_standardizer(standardizer: Standardizer, dataset: LabeledDataset) -> LabeledDataset:
    if standardizer.mean.shape[0] != dataset.n_features:
        raise ValueError(
            f"dimension mismatch: standardizer has {standardizer.mean.shape[0]} features, "
            f"dataset has {dataset.n_features}"
        )
    transformed = (dataset.features - standardizer.mean) / standardizer.std
    return LabeledDataset(
        features=transformed,
        labels=dataset.labels,
        minority_label=dataset.minority_label,
        feature_names=dataset.feature_names,
    )


def stratified_kfold(dataset: LabeledDataset, k: int, seed: int) -> FoldPlan:
    """Per-class round-robin fold assignment after a seeded shuffle.

    Keeps each fold's class counts within one sample of the proportional
    share, so the imbalance ratio is preserved across folds.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(dataset.n_samples, dtype=np.int64)
    for value in sorted(set(dataset.labels.tolist()), key=str):
        idx = np.flatnonzero(dataset.labels == value)
        if len(idx) < k:
            raise ValueError(f"class {value!r} has {len(idx)} samples, fewer than k={k}")
        shuffled = idx[rng.permutation(len(idx))]
        fold_of[shuffled] = np.arange(len(idx)) % k
    assignments = []
    everything = np.arange(dataset.n_samples)
    for fold in range(k):
        test = everything[fold_of == fold]
        train = everything[fold_of != fold]
        assignments.append((train, test))
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def _rose_envelope(theta: np.ndarray) -> np.ndarray:
    return CLOVER_PETAL_RADIUS * np.abs(np.cos(2.5 * theta))


def _inside_rose(points: np.ndarray) -> np.ndarray:
    dx = points[:, 0] - _CLOVER_CENTER[0]
    dy = points[:, 1] - _CLOVER_CENTER[1]
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    return r <= _rose_envelope(theta)


def _rejection_sample(rng, count, low, high, keep):
    """Draw uniform 2-D points in [low, high]^2 until `count` satisfy `keep`."""
    out = np.empty((count, 2))
    filled = 0
    while filled < count:
        batch = rng.uniform(low, high, size=(max(count - filled, 64) * 2, 2))
        good = batch[keep(batch)]
        take = min(len(good), count - filled)
        out[filled:filled + take] = good[:take]
        filled += take
    return out


def generate_clover(majority_n: int, minority_n: int, disturbance_pct: int, seed: int) -> LabeledDataset:
    """Synthetic 2-D imbalanced dataset: minority inside a 5-petal rose region,
    majority uniform over the unit square, with a percentage of minority
    points relocated to a narrow band around the petal borders.

    The majority class deliberately overlaps the minority region: without the
    overlap an RBF SVM separates the classes outright and the no-resampling
    baseline never degenerates to all-majority predictions, which is the
    regime this generator exists to reproduce.

    Separate RNG streams per class keep the untouched points identical across
    different disturbance settings at the same seed.
    """
    if majority_n < 1 or minority_n < 1:
        raise ValueError("majority_n and minority_n must be at least 1")
    if not 0 <= disturbance_pct <= 70:
        raise ValueError("disturbance_pct must be in [0, 70]")
    rng_minor = np.random.default_rng([seed, 0])
    rng_major = np.random.default_rng([seed, 1])
    rng_noise = np.random.default_rng([seed, 2])

    box = CLOVER_PETAL_RADIUS
    minority = _rejection_sample(
        rng_minor, minority_n, 0.5 - box, 0.5 + box, _inside_rose
    )
    majority = rng_major.uniform(0.0, 1.0, size=(majority_n, 2))

    n_relocate = (minority_n * disturbance_pct) // 100
    if n_relocate > 0:
        which = rng_noise.choice(minority_n, size=n_relocate, replace=False)
        theta = rng_noise.uniform(0.0, 2.0 * math.pi, size=n_relocate)
        offset = rng_noise.uniform(-0.5, 0.5, size=n_relocate) * CLOVER_ANNULUS_WIDTH
        radius = np.maximum(_rose_envelope(theta) + offset, 0.0)
        minority[which, 0] = _CLOVER_CENTER[0] + radius * np.cos(theta)
        minority[which, 1] = _CLOVER_CENTER[1] + radius * np.sin(theta)

    features = np.vstack([majority, minority])
    labels = np.asarray(["majority"] * majority_n + ["minority"] * minority_n)
    return LabeledDataset(features, labels, "minority", feature_names=["x", "y"])
