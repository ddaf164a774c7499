"""Visualization configurations and the dataset-dependent candidate space.

A configuration is a data-independent chart abstraction: design choices with
attribute slots replaced by attribute types. A visualization binds an ordered
attribute combination to a configuration's typed slots. Candidate spaces are
generated per dataset and never overlap between datasets with distinct ids.
"""
from __future__ import annotations

import itertools
import json
import random
from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Iterator, Optional

from .errors import (
    DanglingReference,
    EmptyCorpus,
    InvalidVisualization,
    NoNegativesAvailable,
    ParseError,
)
from .tabular import AttributeType, Corpus, Dataset

MARKS = ("bar", "scatter", "line", "area", "box", "histogram", "pie")
CHANNELS = ("x", "y", "color", "size")
AGGREGATES = ("none", "sum", "mean", "bin", "count")

_TYPE_NAMES = {t.value for t in AttributeType}

ConfigFilter = Callable[["VisConfiguration"], bool]

# Cap on attributes per visualization; the combination space is exponential
# and the network input is fixed-width.
MAX_ARITY = 3


@dataclass(frozen=True)
class ChannelSpec:
    """One encoding channel: either an attribute-type slot or a constant value."""

    channel: str
    slot: str
    aggregate: str = "none"

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ParseError(f"unknown channel {self.channel!r}")
        if self.aggregate not in AGGREGATES:
            raise ParseError(f"unknown aggregate {self.aggregate!r}")
        if not self.slot:
            raise ParseError("channel slot must be non-empty")

    @property
    def is_typed(self) -> bool:
        return self.slot in _TYPE_NAMES


@dataclass(frozen=True)
class VisConfiguration:
    """A visualization without any data: mark plus channel slots."""

    mark: str
    channels: tuple

    def __post_init__(self):
        if self.mark not in MARKS:
            raise ParseError(f"unknown mark {self.mark!r}")
        seen = [c.channel for c in self.channels]
        if len(set(seen)) != len(seen):
            raise ParseError(f"duplicate channels in configuration: {seen}")
        if not any(c.is_typed for c in self.channels):
            raise ParseError("configuration must have at least one attribute slot")
        ordered = tuple(sorted(self.channels, key=lambda c: CHANNELS.index(c.channel)))
        object.__setattr__(self, "channels", ordered)

    @property
    def id(self) -> str:
        parts = [self.mark]
        for c in self.channels:
            slot = c.slot if c.is_typed else f"#{c.slot}"
            spec = f"{c.channel}={slot}"
            if c.aggregate != "none":
                spec += f":{c.aggregate}"
            parts.append(spec)
        return ";".join(parts)

    @property
    def typed_channels(self) -> tuple:
        return tuple(c for c in self.channels if c.is_typed)

    @property
    def typed_slots(self) -> tuple:
        """Attribute types required, in channel order; binding is positional."""
        return tuple(AttributeType(c.slot) for c in self.typed_channels)

    @property
    def arity(self) -> int:
        return len(self.typed_slots)

    @property
    def aggregates(self) -> dict:
        return {c.channel: c.aggregate for c in self.channels}


def parse_config_id(config_id: str) -> VisConfiguration:
    """Parse a canonical configuration id back into a configuration."""
    parts = config_id.split(";")
    if len(parts) < 2:
        raise ParseError(f"malformed configuration id {config_id!r}")
    mark, channel_parts = parts[0], parts[1:]
    channels = []
    for part in channel_parts:
        if "=" not in part:
            raise ParseError(f"malformed channel spec {part!r} in {config_id!r}")
        channel, rest = part.split("=", 1)
        aggregate = "none"
        if ":" in rest:
            rest, aggregate = rest.rsplit(":", 1)
        slot = rest[1:] if rest.startswith("#") else rest
        if not rest.startswith("#") and slot not in _TYPE_NAMES:
            raise ParseError(f"unknown slot type {slot!r} in {config_id!r}")
        channels.append(ChannelSpec(channel=channel, slot=slot, aggregate=aggregate))
    return VisConfiguration(mark=mark, channels=tuple(channels))


def config_from_record(record: dict) -> VisConfiguration:
    channels = tuple(
        ChannelSpec(c["channel"], c["slot"], c.get("aggregate", "none"))
        for c in record["channels"]
    )
    return VisConfiguration(mark=record["mark"], channels=channels)


def config_to_record(config: VisConfiguration) -> dict:
    return {
        "id": config.id,
        "mark": config.mark,
        "channels": [
            {"channel": c.channel, "slot": c.slot, "aggregate": c.aggregate}
            for c in config.channels
        ],
    }


@dataclass(frozen=True)
class AttributeCombination:
    """An ordered tuple of attribute names from one dataset; order binds slots."""

    dataset_id: str
    attribute_names: tuple

    def __post_init__(self):
        if not self.attribute_names:
            raise InvalidVisualization("attribute combination is empty")
        if len(set(self.attribute_names)) != len(self.attribute_names):
            raise InvalidVisualization(f"repeated attribute in {self.attribute_names}")

    @property
    def arity(self) -> int:
        return len(self.attribute_names)


@dataclass(frozen=True)
class Visualization:
    """An attribute combination bound to a configuration, optionally labeled."""

    combo: AttributeCombination
    config_id: str
    label: Optional[int] = None

    @property
    def key(self) -> str:
        """Canonical identity: embeds the dataset id, so keys never collide
        across datasets."""
        return f"{self.combo.dataset_id}|{self.config_id}|{','.join(self.combo.attribute_names)}"


def validate_binding(dataset: Dataset, names: tuple, config: VisConfiguration) -> None:
    slots = config.typed_slots
    if len(names) != len(slots):
        raise InvalidVisualization(
            f"{config.id!r} needs {len(slots)} attributes, got {len(names)}"
        )
    for name, slot in zip(names, slots):
        if dataset.attribute(name).type is not slot:
            raise InvalidVisualization(
                f"attribute {name!r} is {dataset.attribute(name).type.value}, "
                f"slot requires {slot.value}"
            )


def visualization_from_record(dataset: Dataset, record: dict) -> Visualization:
    try:
        config_id = record["config_id"]
        names = tuple(record["attributes"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed visualization record: {exc}") from exc
    for name in names:
        if name not in dataset:
            raise DanglingReference(
                f"visualization references attribute {name!r} absent from "
                f"dataset {dataset.id!r}"
            )
    if "config" in record:
        config = config_from_record(record["config"])
        if record.get("config_id") not in (None, config.id):
            raise ParseError(
                f"config_id {config_id!r} does not match config body {config.id!r}"
            )
        config_id = config.id
    else:
        try:
            config = parse_config_id(config_id)
        except ParseError as exc:
            raise DanglingReference(f"unknown configuration {config_id!r}: {exc}") from exc
    validate_binding(dataset, names, config)
    return Visualization(
        combo=AttributeCombination(dataset.id, names), config_id=config_id, label=1
    )


def visualization_to_record(vis: Visualization) -> dict:
    return {"config_id": vis.config_id, "attributes": list(vis.combo.attribute_names)}


@dataclass(frozen=True)
class ConfigVocabulary:
    """The closed set of configurations, ordered by corpus frequency.

    Order is fixed after build and defines one-hot positions.
    """

    configs: tuple
    counts: dict

    def __post_init__(self):
        ids = [c.id for c in self.configs]
        if len(set(ids)) != len(ids):
            raise ParseError("duplicate configuration ids in vocabulary")
        object.__setattr__(self, "_index", {cid: i for i, cid in enumerate(ids)})

    def __len__(self) -> int:
        return len(self.configs)

    def __contains__(self, config_id: str) -> bool:
        return config_id in self._index

    def position(self, config_id: str) -> int:
        return self._index[config_id]

    def config(self, config_id: str) -> VisConfiguration:
        return self.configs[self._index[config_id]]

    def count(self, config_id: str) -> int:
        return self.counts.get(config_id, 0)

    def field_value_keys(self) -> list:
        """Deterministic indicator positions for every mark, (channel, slot) and
        (channel, aggregate) value occurring in the vocabulary."""
        marks, slots, aggs = set(), set(), set()
        for config in self.configs:
            marks.add(("mark", config.mark))
            for c in config.channels:
                slots.add((c.channel, c.slot))
                if c.aggregate != "none":
                    aggs.add((f"{c.channel}.aggregate", c.aggregate))
        return sorted(marks) + sorted(slots) + sorted(aggs)

    def to_json(self) -> str:
        records = []
        for config in self.configs:
            record = config_to_record(config)
            record["count"] = self.counts.get(config.id, 0)
            records.append(record)
        return json.dumps({"version": 1, "configs": records}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ConfigVocabulary":
        payload = json.loads(text)
        if payload.get("version") != 1:
            raise ParseError(f"unsupported vocabulary version {payload.get('version')}")
        configs = []
        for record in payload["configs"]:
            config = config_from_record(record)
            if record.get("id") not in (None, config.id):
                raise ParseError(
                    f"vocabulary id {record['id']!r} does not match body {config.id!r}"
                )
            configs.append(config)
        counts = {c.id: r.get("count", 0) for c, r in zip(configs, payload["configs"])}
        return cls(configs=tuple(configs), counts=counts)


def extract_vocabulary(corpus: Corpus) -> ConfigVocabulary:
    """Deduplicate the configurations used by a corpus, with frequencies.

    Ordered by descending count, then id, so one-hot positions are stable.
    """
    counts = Counter()
    for dataset in corpus.datasets:
        for vis in corpus.visualizations_of(dataset.id):
            counts[vis.config_id] += 1
    if not counts:
        raise EmptyCorpus("corpus has no visualizations")
    ordered = sorted(counts, key=lambda cid: (-counts[cid], cid))
    configs = tuple(parse_config_id(cid) for cid in ordered)
    return ConfigVocabulary(configs=configs, counts=dict(counts))


def enumerate_combinations(dataset: Dataset, max_arity: int) -> list:
    """All attribute subsets of size 1..max_arity, in canonical column order."""
    if max_arity < 1:
        raise ValueError("max_arity must be >= 1")
    names = dataset.attribute_names
    combos = []
    for size in range(1, max_arity + 1):
        for subset in itertools.combinations(names, size):
            combos.append(AttributeCombination(dataset.id, subset))
    return combos


def iter_candidates(
    dataset: Dataset,
    vocab: ConfigVocabulary,
    max_arity: int = MAX_ARITY,
    config_filter: Optional[ConfigFilter] = None,
) -> Iterator[Visualization]:
    """Yield every positionally type-valid binding of dataset attributes to
    vocabulary configurations.

    For multi-slot configurations all type-valid assignments of a subset to
    slots are distinct candidates (an x/y swap is a different chart). Emitted
    candidates are structurally unique.
    """
    configs = [c for c in vocab.configs if config_filter is None or config_filter(c)]
    by_arity: dict = {}
    for config in configs:
        if 1 <= config.arity <= max_arity:
            by_arity.setdefault(config.arity, []).append(config)
    types = {a.name: a.type for a in dataset.attributes}
    for size in range(1, max_arity + 1):
        matching = by_arity.get(size)
        if not matching:
            continue
        for subset in itertools.combinations(dataset.attribute_names, size):
            for config in matching:
                slots = config.typed_slots
                for perm in itertools.permutations(subset):
                    if all(types[n] is s for n, s in zip(perm, slots)):
                        yield Visualization(
                            combo=AttributeCombination(dataset.id, perm),
                            config_id=config.id,
                        )


def generate_candidates(
    dataset: Dataset,
    vocab: ConfigVocabulary,
    max_arity: int = MAX_ARITY,
    config_filter: Optional[ConfigFilter] = None,
) -> list:
    return list(iter_candidates(dataset, vocab, max_arity, config_filter))


def count_candidates(
    dataset: Dataset,
    vocab: ConfigVocabulary,
    max_arity: int = MAX_ARITY,
    config_filter: Optional[ConfigFilter] = None,
) -> int:
    """Exact candidate count without enumeration.

    For a configuration with slot types (t_1..t_a) the number of injective
    type-valid bindings is prod_i (n_{t_i} - j_i) where n_t counts dataset
    attributes of type t and j_i counts earlier slots of the same type.
    """
    type_counts = Counter(a.type for a in dataset.attributes)
    total = 0
    for config in vocab.configs:
        if config_filter is not None and not config_filter(config):
            continue
        slots = config.typed_slots
        if not 1 <= len(slots) <= max_arity:
            continue
        used: Counter = Counter()
        product = 1
        for slot in slots:
            product *= max(type_counts[slot] - used[slot], 0)
            used[slot] += 1
        total += product
    return total


def sample_negatives(
    dataset: Dataset,
    positives: list,
    vocab: ConfigVocabulary,
    m: int,
    seed: int,
    max_arity: int = MAX_ARITY,
    config_filter: Optional[ConfigFilter] = None,
) -> list:
    """Draw m label-0 visualizations uniformly with replacement from the
    dataset's candidate space minus its positives."""
    positive_keys = {v.key for v in positives}
    negatives = [
        c
        for c in iter_candidates(dataset, vocab, max_arity, config_filter)
        if c.key not in positive_keys
    ]
    if not negatives:
        raise NoNegativesAvailable(
            f"dataset {dataset.id!r}: every candidate is a positive"
        )
    rng = random.Random(seed)
    return [
        replace(negatives[rng.randrange(len(negatives))], label=0) for _ in range(m)
    ]


def chart_spec(vis: Visualization, config: VisConfiguration) -> dict:
    """Emit a Vega-Lite-compatible spec: mark plus encoding channels carrying
    field/type/aggregate. Typed slots consume combo attributes positionally."""
    names = iter(vis.combo.attribute_names)
    encoding = {}
    for c in config.channels:
        if c.is_typed:
            entry = {"field": next(names), "type": c.slot}
            if c.aggregate == "bin":
                entry["bin"] = True
            elif c.aggregate != "none":
                entry["aggregate"] = c.aggregate
        else:
            entry = {"value": c.slot}
        encoding[c.channel] = entry
    return {"mark": config.mark, "encoding": encoding}


def abstract_chart_spec(spec: dict) -> "tuple[tuple, VisConfiguration]":
    """Re-abstract a chart spec into (attribute names in slot order, configuration)."""
    try:
        mark = spec["mark"]
        encoding = spec["encoding"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed chart spec: {exc}") from exc
    channels = []
    names = []
    for channel in CHANNELS:
        if channel not in encoding:
            continue
        entry = encoding[channel]
        if "field" in entry:
            aggregate = "bin" if entry.get("bin") else entry.get("aggregate", "none")
            channels.append(ChannelSpec(channel, entry["type"], aggregate))
            names.append(entry["field"])
        else:
            channels.append(ChannelSpec(channel, str(entry["value"])))
    return tuple(names), VisConfiguration(mark=mark, channels=tuple(channels))
