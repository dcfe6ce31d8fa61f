"""Estimate missing facility power capacities from building features.

A boosted-tree regressor is trained on facilities with reported capacities
(square footage standardized, categoricals one-hot encoded), evaluated on a
held-out split, and applied to the facilities with missing capacity.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .gbrt import GbrtModel, Hyperparameters, fit_gbrt
from .records import DataCenterRecord

logger = logging.getLogger(__name__)

DEFAULT_CAPACITY_FLOOR_MW = 0.04  # smallest observed facility capacity
DEFAULT_TEST_FRACTION = 0.2

CATEGORICAL_FEATURES = ("climate_type", "ba_id", "dc_type")
NUMERIC_FEATURES = ("square_footage",)


@dataclass
class FeatureVector:
    square_footage: float
    climate_type: str
    ba_id: str
    dc_type: str

    def __post_init__(self) -> None:
        if not self.square_footage > 0:
            raise ValueError("square_footage must be positive")


@dataclass
class EvalReport:
    r_squared: Optional[float]
    mean_error: float
    n_train: int
    n_test: int

    def to_dict(self) -> dict:
        return {
            "r_squared": self.r_squared,
            "mean_error": self.mean_error,
            "n_train": self.n_train,
            "n_test": self.n_test,
        }


class Preprocessor:
    """Standardizes numerics and one-hot encodes categoricals.

    Statistics are frozen at fit time: the numeric column is shifted/scaled by
    its training mean and population standard deviation, and each categorical
    gets a sorted vocabulary. Unseen categories at transform time encode as an
    all-zeros block.
    """

    def __init__(self) -> None:
        self.numeric_stats: dict[str, tuple[float, float]] = {}
        self.vocabularies: dict[str, list[str]] = {}

    def fit(self, rows: Sequence[FeatureVector]) -> "Preprocessor":
        if not rows:
            raise ValueError("cannot fit preprocessor on empty data")
        for name in NUMERIC_FEATURES:
            values = np.array([getattr(r, name) for r in rows], dtype=float)
            mean = float(values.mean())
            sd = float(values.std())  # population sd
            if sd == 0.0:
                logger.warning("numeric feature %s has zero variance; using sd=1", name)
                sd = 1.0
            self.numeric_stats[name] = (mean, sd)
        for name in CATEGORICAL_FEATURES:
            self.vocabularies[name] = sorted({getattr(r, name) for r in rows})
        return self

    @property
    def column_features(self) -> list[str]:
        """Parent feature name of every output column, for importance folding."""
        names = list(NUMERIC_FEATURES)
        for feat in CATEGORICAL_FEATURES:
            names.extend([feat] * len(self.vocabularies[feat]))
        return names

    @property
    def width(self) -> int:
        return len(NUMERIC_FEATURES) + sum(len(v) for v in self.vocabularies.values())

    def transform(self, rows: Sequence[FeatureVector]) -> np.ndarray:
        if not self.numeric_stats:
            raise ValueError("preprocessor is not fitted")
        out = np.zeros((len(rows), self.width))
        for i, row in enumerate(rows):
            j = 0
            for name in NUMERIC_FEATURES:
                mean, sd = self.numeric_stats[name]
                out[i, j] = (getattr(row, name) - mean) / sd
                j += 1
            for name in CATEGORICAL_FEATURES:
                vocab = self.vocabularies[name]
                value = getattr(row, name)
                try:
                    out[i, j + vocab.index(value)] = 1.0
                except ValueError:
                    pass  # unknown category stays all-zeros
                j += len(vocab)
        return out

    def to_dict(self) -> dict:
        return {
            "numeric_stats": {k: list(v) for k, v in self.numeric_stats.items()},
            "vocabularies": self.vocabularies,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Preprocessor":
        pp = cls()
        pp.numeric_stats = {k: (v[0], v[1]) for k, v in d["numeric_stats"].items()}
        pp.vocabularies = {k: list(v) for k, v in d["vocabularies"].items()}
        return pp


def fit_preprocessor(rows: Sequence[FeatureVector]) -> Preprocessor:
    return Preprocessor().fit(rows)


def predict_capacity(
    model: GbrtModel,
    preprocessor: Preprocessor,
    row: FeatureVector,
    floor_mw: float = DEFAULT_CAPACITY_FLOOR_MW,
) -> float:
    """Predict one capacity in MW, clamped to a positive physical floor."""
    raw = float(model.predict_matrix(preprocessor.transform([row]))[0])
    return max(raw, floor_mw)


def evaluate(model: GbrtModel, X_test: np.ndarray, y_test: np.ndarray,
             n_train: int = 0) -> EvalReport:
    """R² about the test mean plus mean error (actual minus predicted)."""
    y_test = np.asarray(y_test, dtype=float)
    if y_test.size == 0:
        raise ValueError("test set is empty")
    preds = model.predict_matrix(X_test)
    ss_res = float(np.sum((y_test - preds) ** 2))
    ss_tot = float(np.sum((y_test - y_test.mean()) ** 2))
    r2 = None if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return EvalReport(
        r_squared=r2,
        mean_error=float(np.mean(y_test - preds)),
        n_train=n_train,
        n_test=int(y_test.size),
    )


def power_density_stat(
    records: Sequence[DataCenterRecord],
    z_threshold: float = 2.0,
) -> Optional[float]:
    """Mean power density in watts per square foot, outliers excluded.

    Densities with |Z| above the threshold are dropped in a single pass; the
    Z-score uses the population standard deviation of the densities. Returns
    None when undefined (no survivors).
    """
    usable = [
        r for r in records
        if r.square_footage and r.power_capacity_mw
    ]
    if len(usable) < 3:
        raise ValueError("need at least 3 records with footage and capacity")
    density = np.array(
        [r.power_capacity_mw * 1e6 / r.square_footage for r in usable], dtype=float
    )
    sd = float(density.std())  # population sd
    if sd == 0.0:
        return float(density.mean())
    z = (density - density.mean()) / sd
    survivors = density[np.abs(z) <= z_threshold]
    if survivors.size == 0:
        logger.warning("power density: all records dropped as outliers")
        return None
    return float(survivors.mean())


@dataclass
class ImputationResult:
    records: list[DataCenterRecord]
    model: GbrtModel
    preprocessor: Preprocessor
    eval_report: EvalReport
    n_imputed: int
    skipped_ids: list[str]  # missing capacity but no usable features


def _feature_vector(record: DataCenterRecord) -> Optional[FeatureVector]:
    if record.square_footage is None or record.ba_id is None:
        return None
    return FeatureVector(
        square_footage=record.square_footage,
        climate_type=record.climate_type,
        ba_id=record.ba_id,
        dc_type=record.dc_type,
    )


def impute_missing(
    records: Sequence[DataCenterRecord],
    hyperparameters: Optional[Hyperparameters] = None,
    test_fraction: float = DEFAULT_TEST_FRACTION,
    floor_mw: float = DEFAULT_CAPACITY_FLOOR_MW,
) -> ImputationResult:
    """Train on reported capacities, evaluate on a held-out split, fill gaps.

    Facilities missing both capacity and square footage cannot be imputed;
    they are left untouched and listed in ``skipped_ids``.
    """
    hp = hyperparameters or Hyperparameters()
    hp.validate()
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError("test_fraction must be in [0, 1)")

    known = [r for r in records if r.power_capacity_mw is not None]
    missing = [r for r in records if r.power_capacity_mw is None]
    if not known:
        raise ValueError("no records with known capacity; cannot train")

    trainable = [(r, _feature_vector(r)) for r in known]
    trainable = [(r, fv) for r, fv in trainable if fv is not None]
    if not trainable:
        raise ValueError("no known-capacity records with usable features")

    rng = np.random.default_rng(hp.seed)
    order = rng.permutation(len(trainable))
    n_test = int(round(len(trainable) * test_fraction))
    n_test = min(n_test, len(trainable) - 1)  # keep at least one training row
    test_idx = set(order[:n_test].tolist())
    train = [trainable[i] for i in range(len(trainable)) if i not in test_idx]
    test = [trainable[i] for i in sorted(test_idx)]

    preprocessor = fit_preprocessor([fv for _, fv in train])
    X_train = preprocessor.transform([fv for _, fv in train])
    y_train = np.array([r.power_capacity_mw for r, _ in train], dtype=float)
    model = fit_gbrt(X_train, y_train, hp, preprocessor.column_features)

    if test:
        X_test = preprocessor.transform([fv for _, fv in test])
        y_test = np.array([r.power_capacity_mw for r, _ in test], dtype=float)
        report = evaluate(model, X_test, y_test, n_train=len(train))
    else:
        report = EvalReport(r_squared=None, mean_error=float("nan"),
                            n_train=len(train), n_test=0)

    out: list[DataCenterRecord] = []
    skipped: list[str] = []
    n_imputed = 0
    for record in records:
        if record.power_capacity_mw is not None:
            out.append(record)
            continue
        fv = _feature_vector(record)
        if fv is None:
            skipped.append(record.id)
            out.append(record)
            continue
        filled = DataCenterRecord(**{**record.to_dict(),
                                     "power_capacity_mw": predict_capacity(
                                         model, preprocessor, fv, floor_mw),
                                     "capacity_provenance": "imputed"})
        out.append(filled)
        n_imputed += 1
    if skipped:
        logger.warning("%d facilities lack features for imputation: %s",
                       len(skipped), ", ".join(skipped[:5]))
    if missing and n_imputed == 0 and not skipped:
        logger.warning("no capacities were imputed despite %d missing", len(missing))
    return ImputationResult(
        records=out,
        model=model,
        preprocessor=preprocessor,
        eval_report=report,
        n_imputed=n_imputed,
        skipped_ids=skipped,
    )
