"""Dataset container, schema-driven CSV loading, and seeded splits."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SchemaError

log = logging.getLogger(__name__)

ROLES = ("feature", "sensitive", "label", "ignore")
KINDS = ("numeric", "categorical")


@dataclass(frozen=True)
class Column:
    """One raw CSV column: its role in the task and how to parse it.

    positive_value, for sensitive/label columns, names the raw string
    mapped to 1; every other observed value maps to 0. When it is None
    the column must already contain 0/1.
    """

    name: str
    role: str = "feature"
    kind: str = "numeric"
    positive_value: str | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise SchemaError(f"column '{self.name}': unknown role '{self.role}'")
        if self.kind not in KINDS:
            raise SchemaError(f"column '{self.name}': unknown kind '{self.kind}'")


@dataclass(frozen=True)
class ColumnSchema:
    """Ordered column descriptions for one CSV layout."""

    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        for role in ("label", "sensitive"):
            k = sum(1 for c in self.columns if c.role == role)
            if k != 1:
                raise SchemaError(f"schema needs exactly one {role} column, found {k}")

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnSchema":
        if not isinstance(d, dict) or "columns" not in d:
            raise SchemaError("schema JSON must be an object with a 'columns' list")
        cols = []
        for item in d["columns"]:
            if not isinstance(item, dict) or "name" not in item:
                raise SchemaError("each schema column needs at least a 'name'")
            extra = set(item) - {"name", "role", "kind", "positive_value"}
            if extra:
                raise SchemaError(f"unknown schema keys: {sorted(extra)}")
            cols.append(
                Column(
                    name=str(item["name"]),
                    role=item.get("role", "feature"),
                    kind=item.get("kind", "numeric"),
                    positive_value=item.get("positive_value"),
                )
            )
        return cls(columns=tuple(cols))

    @classmethod
    def from_json_file(cls, path) -> "ColumnSchema":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        cols = []
        for c in self.columns:
            item = {"name": c.name, "role": c.role, "kind": c.kind}
            if c.positive_value is not None:
                item["positive_value"] = c.positive_value
            cols.append(item)
        return {"columns": cols}


@dataclass
class Dataset:
    """Encoded learning problem: features X, sensitive attribute s, labels y."""

    features: np.ndarray
    sensitive: np.ndarray
    labels: np.ndarray
    feature_names: list[str]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.sensitive = np.asarray(self.sensitive, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        n, p = self.features.shape
        if n < 1 or p < 1:
            raise DataError("dataset needs at least one row and one feature")
        if self.sensitive.shape != (n,) or self.labels.shape != (n,):
            raise DataError("features, sensitive and labels row counts differ")
        if len(self.feature_names) != p:
            raise DataError("feature_names length does not match feature count")
        for name, v in (("sensitive", self.sensitive), ("labels", self.labels)):
            bad = ~np.isin(v, (0, 1))
            if bad.any():
                raise DataError(f"{name} contains values other than 0/1")
        if not np.isfinite(self.features).all():
            raise DataError("features contain non-finite values")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.features[idx],
            self.sensitive[idx],
            self.labels[idx],
            list(self.feature_names),
        )


def _binarize(name: str, raw: list[str], positive_value: str | None) -> np.ndarray:
    if positive_value is not None:
        distinct = sorted(set(raw))
        if len(distinct) > 2:
            raise DataError(
                f"column '{name}' has {len(distinct)} distinct values {distinct[:4]}, "
                "expected a binary column"
            )
        return np.array([1 if v == positive_value else 0 for v in raw], dtype=np.int64)
    try:
        vals = np.array([float(v) for v in raw])
    except ValueError as exc:
        raise DataError(
            f"column '{name}' is not numeric and no positive_value mapping is set"
        ) from exc
    if not np.isin(vals, (0.0, 1.0)).all():
        raise DataError(f"column '{name}' must contain only 0/1 after mapping")
    return vals.astype(np.int64)


def load_csv(path, schema: ColumnSchema) -> Dataset:
    """Read a CSV file and encode it per the schema.

    Numeric feature columns are parsed as reals, categorical feature
    columns are one-hot encoded (one indicator per observed category,
    named "col=value", categories in sorted order). The sensitive and
    label columns are binarized via their positive_value mapping. Rows
    with missing or unparseable cells are dropped with a logged count.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise
    if not rows:
        raise DataError(f"{path}: empty file")
    header, data_rows = rows[0], rows[1:]
    if not data_rows:
        raise DataError(f"{path}: no data rows")

    pos = {}
    for col in schema.columns:
        if col.role == "ignore":
            continue
        if col.name not in header:
            raise SchemaError(f"{path}: column '{col.name}' missing from header")
        pos[col.name] = header.index(col.name)

    used = [c for c in schema.columns if c.role != "ignore"]
    kept: list[list[str]] = []
    dropped = 0
    for row in data_rows:
        if len(row) != len(header):
            dropped += 1
            continue
        cells = [row[pos[c.name]].strip() for c in used]
        ok = True
        for c, cell in zip(used, cells):
            if cell == "":
                ok = False
                break
            if c.kind == "numeric" and c.role == "feature":
                try:
                    x = float(cell)
                except ValueError:
                    ok = False
                    break
                if not np.isfinite(x):
                    ok = False
                    break
        if ok:
            kept.append(cells)
        else:
            dropped += 1
    if dropped:
        log.info("%s: dropped %d unparseable row(s)", path, dropped)
    if not kept:
        raise DataError(f"{path}: no parseable data rows")

    columns = {c.name: [r[i] for r in kept] for i, c in enumerate(used)}

    blocks: list[np.ndarray] = []
    names: list[str] = []
    sensitive = labels = None
    for c in used:
        raw = columns[c.name]
        if c.role == "sensitive":
            sensitive = _binarize(c.name, raw, c.positive_value)
        elif c.role == "label":
            labels = _binarize(c.name, raw, c.positive_value)
        elif c.kind == "numeric":
            blocks.append(np.array([float(v) for v in raw])[:, None])
            names.append(c.name)
        else:
            cats = sorted(set(raw))
            arr = np.array(raw)
            for cat in cats:
                blocks.append((arr == cat).astype(float)[:, None])
                names.append(f"{c.name}={cat}")
    if not blocks:
        raise SchemaError("schema defines no feature columns")
    return Dataset(np.hstack(blocks), sensitive, labels, names)


def train_test_split(ds: Dataset, test_fraction: float, seed: int):
    """Partition rows into (train, test) by a seeded uniform shuffle.

    The test part holds round(n * test_fraction) rows, clamped so both
    parts are nonempty. Row order within each part follows the original
    dataset. Same seed, same split.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if ds.n < 2:
        raise ValueError("need at least 2 rows to split")
    n_test = int(round(ds.n * test_fraction))
    n_test = min(max(n_test, 1), ds.n - 1)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return ds.subset(train_idx), ds.subset(test_idx)
