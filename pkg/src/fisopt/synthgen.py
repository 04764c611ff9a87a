"""Synthetic field-interaction data: sampling raw records and rule-based labeling.

Field profiles and label rule tables are JSON data so experiments can swap
them without code changes.  Only one rule in the shipped table (the
``acceptable`` rule flagged ``"synthetic": false``) reflects a documented
production rule; the rest are synthetic.
"""

from __future__ import annotations

import json
import logging
import math
import operator
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .dataset import (
    COUNT_FIELDS,
    Dataset,
    DomainError,
    FieldRecord,
    InteractionLabels,
    TARGET_GROUPS,
    _label_token,
    dataset_from_records,
)

log = logging.getLogger(__name__)

FIELDS = ("say_account", "say_amount", "select_beneficiary", "say_confirmation")

EVENT_RATES = (
    "no_match",
    "no_input",
    "max_speech_timeout",
    "barge_in",
    "caller_disconnect",
    "transfer_to_csa",
    "dtmf_transfer",
    "system_error",
    "confirmation",
    "confirmation_accept",
)

MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class FieldProfile:
    field_name: str
    confidence_mean: float
    confidence_std: float
    mean_duration: float
    event_rates: dict[str, float]
    experienced_fraction: float = 0.0
    # multiplier applied to difficulty/failure event rates for experienced callers
    experienced_event_scale: float = 0.5
    experienced_barge_in: float = 0.0
    duration_sigma: float = 0.4
    seconds_per_event: float = 4.0
    # confidence (percent) below which a confirmation prompt may be played
    confirmation_threshold: float = 70.0

    def __post_init__(self):
        if self.mean_duration <= 0:
            raise DomainError("mean_duration must be > 0")
        if self.confidence_std <= 0 or self.duration_sigma <= 0:
            raise DomainError("standard deviations must be > 0")
        unknown = set(self.event_rates) - set(EVENT_RATES)
        if unknown:
            raise DomainError(f"unknown event rates {sorted(unknown)}")
        rates = [*self.event_rates.values(), self.experienced_fraction,
                 self.experienced_event_scale, self.experienced_barge_in]
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise DomainError("rates and fractions must lie in [0, 1]")

    def rate(self, name: str) -> float:
        return float(self.event_rates.get(name, 0.0))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FieldProfile":
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "FieldProfile":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_profile(field_name: str) -> FieldProfile:
    if field_name not in FIELDS:
        raise DomainError(f"unknown field {field_name!r}; expected one of {FIELDS}")
    text = resources.files("fisopt").joinpath(f"data/profiles/{field_name}.json").read_text()
    return FieldProfile.from_dict(json.loads(text))


# -- rule tables ------------------------------------------------------------

_OPS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "in": lambda a, b: a in b,
}


@dataclass(frozen=True)
class Rule:
    when: tuple[tuple[str, str, Any], ...]
    label: Any
    note: str = ""
    synthetic: bool = True

    def matches(self, features: dict[str, Any]) -> bool:
        return all(_OPS[op](features[name], value) for name, op, value in self.when)


@dataclass(frozen=True)
class GroupRules:
    rules: tuple[Rule, ...]
    default: Any

    def evaluate(self, features: dict[str, Any]) -> Any:
        for rule in self.rules:
            if rule.matches(features):
                return rule.label
        return self.default


@dataclass(frozen=True)
class LabelRuleSet:
    """Ordered first-match-wins rules per output group, each with a default."""

    groups: dict[str, GroupRules]
    name: str = "custom"

    def __post_init__(self):
        missing = {g for g, _ in TARGET_GROUPS} - set(self.groups)
        if missing:
            raise DomainError(f"rule set lacks groups {sorted(missing)}")
        known = set(_feature_names())
        classes = dict(TARGET_GROUPS)
        for group, gr in self.groups.items():
            if group not in classes:
                raise DomainError(f"unknown output group {group!r}")
            for label in [gr.default, *(r.label for r in gr.rules)]:
                if _label_token(label) not in classes[group]:
                    raise DomainError(f"{group}: label {label!r} not one of {classes[group]}")
            for rule in gr.rules:
                for name, op, _ in rule.when:
                    if name not in known:
                        raise DomainError(f"{group}: unknown feature {name!r}")
                    if op not in _OPS:
                        raise DomainError(f"{group}: unknown operator {op!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "LabelRuleSet":
        groups = {}
        for group, spec in d["groups"].items():
            rules = tuple(
                Rule(
                    when=tuple(tuple(c) for c in r["when"]),
                    label=r["label"],
                    note=r.get("note", ""),
                    synthetic=r.get("synthetic", True),
                )
                for r in spec["rules"]
            )
            groups[group] = GroupRules(rules, spec["default"])
        return cls(groups=groups, name=d.get("name", "custom"))

    @classmethod
    def load(cls, path: str | Path) -> "LabelRuleSet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_rules() -> LabelRuleSet:
    text = resources.files("fisopt").joinpath("data/rules_default.json").read_text()
    return LabelRuleSet.from_dict(json.loads(text))


def _feature_names() -> list[str]:
    probe = record_features(FieldRecord(confidence=50.0, duration=1.0), None)
    return list(probe)


def record_features(record: FieldRecord, profile: FieldProfile | None) -> dict[str, Any]:
    """Record fields plus the derived quantities rules may test."""
    feats = record.to_dict()
    counts = [getattr(record, f"{name}_count") for name in COUNT_FIELDS]
    feats["difficulty_events"] = sum(counts)
    feats["max_difficulty_count"] = max(counts)
    mean = profile.mean_duration if profile is not None else 1.0
    feats["duration_ratio"] = record.duration / mean
    return feats


def label_record(record: FieldRecord, rules: LabelRuleSet, profile: FieldProfile) -> InteractionLabels:
    feats = record_features(record, profile)
    return InteractionLabels(**{g: rules.groups[g].evaluate(feats) for g, _ in TARGET_GROUPS})


# -- sampling ---------------------------------------------------------------

def _count_events(rng: np.random.Generator, rate: float) -> int:
    # each further attempt fails again with the same probability; capped at 3 strikes
    count = 0
    while count < 3 and rng.random() < rate:
        count += 1
    return count


def _truncated_normal(rng: np.random.Generator, mean: float, std: float, lo: float, hi: float) -> float:
    for _ in range(MAX_ATTEMPTS):
        v = rng.normal(mean, std)
        if lo <= v <= hi:
            return float(v)
    return float(np.clip(mean, lo, hi))


def sample_record(profile: FieldProfile, rng: np.random.Generator) -> tuple[FieldRecord, bool]:
    """Draw one call-flow-consistent record.

    Returns the record and the latent experienced-caller flag used to skew its
    event rates.
    """
    experienced = bool(rng.random() < profile.experienced_fraction)
    scale = profile.experienced_event_scale if experienced else 1.0

    def rate(name: str) -> float:
        return profile.rate(name) * scale

    for _ in range(MAX_ATTEMPTS):
        counts = {f"{n}_count": _count_events(rng, rate(n)) for n in COUNT_FIELDS}
        barge_rate = profile.rate("barge_in")
        if experienced:
            barge_rate = max(barge_rate, profile.experienced_barge_in)
        barge_in = bool(rng.random() < barge_rate)
        system_error = bool(rng.random() < rate("system_error"))
        dtmf = bool(rng.random() < rate("dtmf_transfer"))
        voluntary_transfer = bool(rng.random() < rate("transfer_to_csa"))
        disconnect = bool(rng.random() < rate("caller_disconnect"))
        confidence = _truncated_normal(rng, profile.confidence_mean, profile.confidence_std, 0.0, 100.0)
        presented = bool(confidence < profile.confirmation_threshold
                         and rng.random() < profile.rate("confirmation"))
        accepted = bool(presented and rng.random() < profile.rate("confirmation_accept"))

        # third strike on any count, or a '#' press, hands the call to an agent
        transfer = voluntary_transfer or dtmf or 3 in counts.values()
        if transfer and disconnect:
            continue

        events = sum(counts.values())
        median = profile.mean_duration * math.exp(-profile.duration_sigma ** 2 / 2)
        duration = float(rng.lognormal(math.log(median), profile.duration_sigma))
        duration += profile.seconds_per_event * events + (2.0 if presented else 0.0)
        record = FieldRecord(
            confidence=confidence,
            barge_in=barge_in,
            caller_disconnect=disconnect,
            transfer_to_csa=transfer,
            dtmf_transfer=dtmf,
            duration=duration,
            system_error=system_error,
            confirmation_presented=presented,
            confirmation_accepted=accepted,
            **counts,
        )
        return record, experienced
    raise RuntimeError(f"no consistent record after {MAX_ATTEMPTS} draws; check profile rates")


def generate_records(
    profile: FieldProfile, rules: LabelRuleSet, n: int, seed: int
) -> tuple[list[FieldRecord], list[InteractionLabels]]:
    records, labels = [], []
    for i in range(n):
        # per-sample stream: sample i is identical however the work is partitioned
        rng = np.random.default_rng([seed, i])
        rec, _ = sample_record(profile, rng)
        records.append(rec)
        labels.append(label_record(rec, rules, profile))
    return records, labels


def generate_dataset(
    profile: FieldProfile,
    rules: LabelRuleSet,
    n: int,
    seed: int,
    fractions=(0.6, 0.2, 0.2),
) -> Dataset:
    if n < 10:
        raise DomainError(f"need at least 10 samples, got {n}")
    records, labels = generate_records(profile, rules, n, seed)
    meta = {"field": profile.field_name, "n": n, "seed": seed, "rules": rules.name,
            "fractions": list(fractions)}
    return dataset_from_records(records, labels, fractions=fractions, seed=seed, meta=meta)
