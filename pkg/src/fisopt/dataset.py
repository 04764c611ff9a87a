"""Field-interaction records, their binary-word encodings and dataset splits.

Each field interaction becomes an 18-element input row (confidence, three
3-bit count words, single-bit flags, duration, a 2-bit confirmation word)
and a one-hot target row with one group per output interaction class.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SPLITS = ("train", "validation", "test")


class DomainError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


@dataclass(frozen=True)
class Layout:
    """Names of the encoded input columns and the one-hot target groups."""

    input_names: tuple[str, ...]
    target_groups: tuple[tuple[str, tuple[str, ...]], ...]
    continuous: tuple[str, ...] = ()

    @property
    def input_dim(self) -> int:
        return len(self.input_names)

    @property
    def target_dim(self) -> int:
        return sum(len(classes) for _, classes in self.target_groups)

    def group_slices(self) -> list[slice]:
        out, start = [], 0
        for _, classes in self.target_groups:
            out.append(slice(start, start + len(classes)))
            start += len(classes)
        return out

    def continuous_indices(self) -> list[int]:
        return [self.input_names.index(name) for name in self.continuous]

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.input_names),
            "targets": [{"group": g, "classes": list(c)} for g, c in self.target_groups],
            "continuous": list(self.continuous),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Layout":
        return cls(
            input_names=tuple(d["inputs"]),
            target_groups=tuple((t["group"], tuple(t["classes"])) for t in d["targets"]),
            continuous=tuple(d.get("continuous", ())),
        )


COUNT_FIELDS = ("no_match", "no_input", "max_speech_timeout")

INPUT_NAMES: tuple[str, ...] = (
    "confidence",
    "no_match_1", "no_match_2", "no_match_3",
    "no_input_1", "no_input_2", "no_input_3",
    "max_speech_timeout_1", "max_speech_timeout_2", "max_speech_timeout_3",
    "barge_in",
    "caller_disconnect",
    "transfer_to_csa",
    "dtmf_transfer",
    "duration",
    "system_error",
    "confirmation_presented",
    "confirmation_accepted",
)

# column index of every encoded input, published so callers never hard-code offsets
INPUT_INDEX: dict[str, int] = {name: i for i, name in enumerate(INPUT_NAMES)}

TARGET_GROUPS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("field_performance", ("good", "acceptable", "investigate", "bad")),
    ("transfer_reason", ("difficulty", "no_transfer", "unknown")),
    ("disconnect_reason", ("difficulty", "no_transfer", "unknown")),
    ("difficulty_attempt", ("attempt1", "attempt2", "attempt3")),
    ("duration_class", ("high", "medium", "low")),
    ("recognition_level", ("high", "medium", "low")),
    ("experienced_caller", ("true", "false")),
)

IVR_LAYOUT = Layout(INPUT_NAMES, TARGET_GROUPS, continuous=("confidence", "duration"))


@dataclass(frozen=True)
class FieldRecord:
    confidence: float
    no_match_count: int = 0
    no_input_count: int = 0
    max_speech_timeout_count: int = 0
    barge_in: bool = False
    caller_disconnect: bool = False
    transfer_to_csa: bool = False
    dtmf_transfer: bool = False
    duration: float = 0.0
    system_error: bool = False
    confirmation_presented: bool = False
    confirmation_accepted: bool = False

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 100.0:
            raise DomainError(f"confidence {self.confidence} outside [0, 100]")
        for name in COUNT_FIELDS:
            count = getattr(self, f"{name}_count")
            if count not in (0, 1, 2, 3):
                raise DomainError(f"{name}_count must be in 0..3, got {count}")
        if self.duration < 0:
            raise DomainError(f"negative duration {self.duration}")
        if self.confirmation_accepted and not self.confirmation_presented:
            raise DomainError("confirmation accepted without being presented")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class InteractionLabels:
    field_performance: str
    transfer_reason: str
    disconnect_reason: str
    difficulty_attempt: str
    duration_class: str
    recognition_level: str
    experienced_caller: bool

    def __post_init__(self):
        for group, classes in TARGET_GROUPS:
            if _label_token(getattr(self, group)) not in classes:
                raise DomainError(f"{group}={getattr(self, group)!r} not one of {classes}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _label_token(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return value


@dataclass(frozen=True)
class EncodedSample:
    inputs: np.ndarray
    targets: np.ndarray


def encode_count_word(count: int) -> list[int]:
    """Cumulative 3-bit word: ``count`` leading ones, e.g. 3 -> [1, 1, 1]."""
    if isinstance(count, bool) or int(count) != count or not 0 <= count <= 3:
        raise DomainError(f"count must be an integer in 0..3, got {count!r}")
    return [1 if k < count else 0 for k in range(3)]


def encode_confirmed(presented: bool, accepted: bool) -> list[int]:
    if accepted and not presented:
        raise DomainError("confirmation accepted without being presented")
    return [int(bool(presented)), int(bool(accepted))]


def normalize(value: float, lo: float, hi: float) -> float:
    """Min-max scale ``value`` into [0, 1], clamping out-of-range values."""
    if not lo < hi:
        raise DomainError(f"normalization needs min < max, got ({lo}, {hi})")
    if value <= lo:
        return 0.0
    if value >= hi:
        return 1.0
    return (value - lo) / (hi - lo)


def denormalize(value: float, lo: float, hi: float) -> float:
    return lo + value * (hi - lo)


def encode_labels(labels: InteractionLabels, layout: Layout = IVR_LAYOUT) -> np.ndarray:
    bits = np.zeros(layout.target_dim)
    for (group, classes), sl in zip(layout.target_groups, layout.group_slices()):
        bits[sl.start + classes.index(_label_token(getattr(labels, group)))] = 1.0
    return bits


def decode_labels(bits: Sequence[float], layout: Layout = IVR_LAYOUT) -> InteractionLabels:
    """Argmax decode of one row of target bits or raw outputs; ties go to the lowest index."""
    bits = np.asarray(bits, dtype=float)
    values = {}
    for (group, classes), sl in zip(layout.target_groups, layout.group_slices()):
        token = classes[int(np.argmax(bits[sl]))]
        values[group] = (token == "true") if group == "experienced_caller" else token
    return InteractionLabels(**values)


def encode_record(
    record: FieldRecord,
    labels: InteractionLabels | None,
    norm_params: dict[str, tuple[float, float]],
) -> EncodedSample:
    row: list[float] = [normalize(record.confidence, *norm_params["confidence"])]
    for name in COUNT_FIELDS:
        row.extend(encode_count_word(getattr(record, f"{name}_count")))
    row.extend(int(getattr(record, f)) for f in
               ("barge_in", "caller_disconnect", "transfer_to_csa", "dtmf_transfer"))
    row.append(normalize(record.duration, *norm_params["duration"]))
    row.append(int(record.system_error))
    row.extend(encode_confirmed(record.confirmation_presented, record.confirmation_accepted))
    targets = encode_labels(labels) if labels is not None else np.zeros(IVR_LAYOUT.target_dim)
    return EncodedSample(np.asarray(row, dtype=float), targets)


def decode_record(
    sample: EncodedSample, norm_params: dict[str, tuple[float, float]]
) -> tuple[FieldRecord, InteractionLabels]:
    x = np.asarray(sample.inputs, dtype=float)
    ix = INPUT_INDEX
    counts = {
        f"{name}_count": int(round(x[ix[f"{name}_1"]:ix[f"{name}_3"] + 1].sum()))
        for name in COUNT_FIELDS
    }
    flags = {
        f: bool(x[ix[f]])
        for f in ("barge_in", "caller_disconnect", "transfer_to_csa", "dtmf_transfer",
                  "system_error", "confirmation_presented", "confirmation_accepted")
    }
    record = FieldRecord(
        confidence=denormalize(x[ix["confidence"]], *norm_params["confidence"]),
        duration=denormalize(x[ix["duration"]], *norm_params["duration"]),
        **counts,
        **flags,
    )
    return record, decode_labels(sample.targets)


@dataclass
class Dataset:
    """Encoded samples with split tags.

    ``raw`` keeps the unnormalized values of the layout's continuous columns so
    the dataset can be re-split and re-normalized from its training part.
    """

    inputs: np.ndarray
    targets: np.ndarray
    split: np.ndarray
    layout: Layout = IVR_LAYOUT
    norm_params: dict[str, tuple[float, float]] = field(default_factory=dict)
    raw: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        self.split = np.asarray(self.split, dtype=object)
        n = len(self.inputs)
        if self.raw is None:
            self.raw = np.zeros((n, 0))
        self.raw = np.asarray(self.raw, dtype=float).reshape(n, len(self.layout.continuous))
        if self.inputs.shape[1] != self.layout.input_dim:
            raise DomainError(f"inputs have {self.inputs.shape[1]} columns, layout has "
                              f"{self.layout.input_dim}")
        if self.targets.shape != (n, self.layout.target_dim):
            raise DomainError(f"targets shape {self.targets.shape} does not match layout")
        if len(self.split) != n:
            raise DomainError("one split tag per sample required")
        bad = set(self.split.tolist()) - set(SPLITS)
        if bad:
            raise DomainError(f"unknown split tags {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.inputs)

    def view(self, split: str) -> tuple[np.ndarray, np.ndarray]:
        if split not in SPLITS:
            raise DomainError(f"unknown split {split!r}")
        mask = self.split == split
        return self.inputs[mask], self.targets[mask]

    def sizes(self) -> dict[str, int]:
        return {s: int(np.sum(self.split == s)) for s in SPLITS}

    def class_counts(self, group: int = 0) -> dict[str, int]:
        name, classes = self.layout.target_groups[group]
        sl = self.layout.group_slices()[group]
        idx = np.argmax(self.targets[:, sl], axis=1)
        return {c: int(np.sum(idx == k)) for k, c in enumerate(classes)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.layout == other.layout
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.split, other.split)
            and np.array_equal(self.raw, other.raw)
            and {k: tuple(v) for k, v in self.norm_params.items()}
            == {k: tuple(v) for k, v in other.norm_params.items()}
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "header": {
                "layout": self.layout.to_dict(),
                "norm_params": {k: [float(a), float(b)] for k, (a, b) in self.norm_params.items()},
                "meta": self.meta,
            },
            "rows": [
                {
                    "split": str(s),
                    "inputs": [float(v) for v in x],
                    "targets": [float(v) for v in y],
                    "raw": [float(v) for v in r],
                }
                for x, y, s, r in zip(self.inputs, self.targets, self.split, self.raw)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dataset":
        header, rows = d["header"], d["rows"]
        layout = Layout.from_dict(header["layout"])
        if not rows:
            raise DomainError("dataset file has no rows")
        return cls(
            inputs=[r["inputs"] for r in rows],
            targets=[r["targets"] for r in rows],
            split=[r["split"] for r in rows],
            layout=layout,
            norm_params={k: (float(v[0]), float(v[1])) for k, v in header["norm_params"].items()},
            raw=[r.get("raw", []) for r in rows],
            meta=header.get("meta", {}),
        )

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def load_json(cls, path: str | Path) -> "Dataset":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        target_cols = [f"{g}={c}" for g, classes in self.layout.target_groups for c in classes]
        writer.writerow(["split", *self.layout.input_names, *target_cols])
        for x, y, s in zip(self.inputs, self.targets, self.split):
            writer.writerow([s, *(repr(float(v)) for v in x), *(int(v) for v in y)])
        return buf.getvalue()

    def save_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def _allocate(order: Iterable[int], fractions: Sequence[float], n_total: int) -> np.ndarray:
    # largest-deficit apportionment: every prefix of `order` is split as close to
    # `fractions` as integers allow, so each class block and the total stay within ±1
    tags = np.empty(n_total, dtype=object)
    fr = np.asarray(fractions, dtype=float)
    assigned = np.zeros(len(fr))
    for i, idx in enumerate(order):
        k = int(np.argmax(fr * (i + 1) - assigned))
        assigned[k] += 1
        tags[idx] = SPLITS[k]
    return tags


def _check_fractions(fractions: Sequence[float]) -> tuple[float, float, float]:
    if len(fractions) != 3:
        raise DomainError("fractions must be (train, validation, test)")
    fr = tuple(float(f) for f in fractions)
    if any(f < 0 for f in fr) or fr[0] <= 0:
        raise DomainError(f"fractions must be non-negative with a positive train share: {fr}")
    if abs(sum(fr) - 1.0) > 1e-9:
        raise DomainError(f"fractions must sum to 1, got {sum(fr)}")
    return fr


def compute_norm_params(raw: np.ndarray, names: Sequence[str]) -> dict[str, tuple[float, float]]:
    params = {}
    for j, name in enumerate(names):
        lo, hi = float(np.min(raw[:, j])), float(np.max(raw[:, j]))
        if not lo < hi:
            raise DomainError(f"training values of {name!r} are constant; cannot normalize")
        params[name] = (lo, hi)
    return params


def apply_normalization(dataset: Dataset, norm_params: dict[str, tuple[float, float]]) -> np.ndarray:
    inputs = dataset.inputs.copy()
    for j, col in enumerate(dataset.layout.continuous_indices()):
        lo, hi = norm_params[dataset.layout.continuous[j]]
        inputs[:, col] = np.clip((dataset.raw[:, j] - lo) / (hi - lo), 0.0, 1.0)
    return inputs


def split_dataset(dataset: Dataset, fractions=(0.6, 0.2, 0.2), seed: int = 0) -> Dataset:
    """Stratified train/validation/test split, re-normalized from the train part.

    Stratification uses the first target group (field performance for IVR
    data).  The result is a new :class:`Dataset`; the input is not modified.
    """
    fr = _check_fractions(fractions)
    n = len(dataset)
    if n == 0:
        raise DomainError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    sl = dataset.layout.group_slices()[0]
    strata = np.argmax(dataset.targets[:, sl], axis=1)
    order = []
    for cls in np.unique(strata):
        members = np.flatnonzero(strata == cls)
        order.extend(rng.permutation(members).tolist())
    tags = _allocate(order, fr, n)

    norm_params = dict(dataset.norm_params)
    inputs = dataset.inputs
    if dataset.layout.continuous:
        norm_params = compute_norm_params(dataset.raw[tags == "train"], dataset.layout.continuous)
        inputs = apply_normalization(dataset, norm_params)
    return Dataset(
        inputs=inputs,
        targets=dataset.targets.copy(),
        split=tags,
        layout=dataset.layout,
        norm_params=norm_params,
        raw=dataset.raw.copy(),
        meta=dict(dataset.meta),
    )


def dataset_from_records(
    records: Sequence[FieldRecord],
    labels: Sequence[InteractionLabels],
    fractions=(0.6, 0.2, 0.2),
    seed: int = 0,
    meta: dict | None = None,
) -> Dataset:
    """Encode records into a split dataset with train-only normalization."""
    if not records:
        raise DomainError("no records")
    if len(records) != len(labels):
        raise DomainError("one label set per record required")
    raw = np.array([[r.confidence, r.duration] for r in records], dtype=float)
    placeholder = {"confidence": (0.0, 100.0), "duration": (0.0, max(1.0, raw[:, 1].max()))}
    rows = [encode_record(r, lab, placeholder) for r, lab in zip(records, labels)]
    unsplit = Dataset(
        inputs=[s.inputs for s in rows],
        targets=[s.targets for s in rows],
        split=["train"] * len(rows),
        layout=IVR_LAYOUT,
        norm_params=placeholder,
        raw=raw,
        meta=meta or {},
    )
    return split_dataset(unsplit, fractions, seed)
