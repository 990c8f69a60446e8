"""Reputation server: score table, feedback log, aggregation and detection.

Scores live in {0..m}. Thresholds are compared on the normalized score
``r / m``. Both the aggregation rule (+1 per positive report, -2 per
negative, clamped) and the detection rule (at least ``DETECT_MIN_REPORTS``
reports in the window, strictly more than half negative) are local policy
choices; the scheme only requires that some such rules exist.

On disk a store is a directory holding ``log.jsonl`` (authoritative, one JSON
object per line with keys ``kind, vehicle, value, interval, reporter`` in
that order) and ``snapshot.json`` (the derived table, tagged with
``SNAPSHOT_FORMAT``).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import CorruptStore, UnknownMember

POSITIVE = 1
NEGATIVE = -1
AGGR_REWARD = 1
AGGR_PENALTY = 2
DETECT_MIN_REPORTS = 5
SNAPSHOT_FORMAT = "bbsrep-rs-snapshot/1"
LOG_FIELDS = ("kind", "vehicle", "value", "interval", "reporter")
LOG_KINDS = ("register", "feedback", "aggregate")


def as_fraction(value) -> Fraction:
    """Exact rational for ints, Fractions, decimal strings and floats (via repr)."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class DiscountParams:
    psi: Fraction = Fraction(1, 2)
    psi_td: Fraction = Fraction(4)
    interval_length: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("psi", "psi_td", "interval_length"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if not 0 <= self.psi <= 1:
            raise ValueError("psi must lie in [0, 1]")
        if self.psi_td <= 0:
            raise ValueError("psi_td must be positive")
        if self.interval_length <= 0:
            raise ValueError("interval_length must be positive")


@dataclass
class ReputationRecord:
    vehicle: str
    score: int
    last_update: int


@dataclass(frozen=True)
class Feedback:
    target: str
    reporter: str
    value: int
    interval: int

    def __post_init__(self):
        if self.value not in (POSITIVE, NEGATIVE):
            raise ValueError("feedback value must be +1 or -1")


def time_discount(t, params: DiscountParams) -> Fraction:
    """1 - t/psi_td for t < psi_td, else 0."""
    t = as_fraction(t)
    if t < 0:
        raise ValueError("time difference must be non-negative")
    if t >= params.psi_td:
        return Fraction(0)
    return 1 - t / params.psi_td


def discounted_scores(score: int, t_i: int, params: DiscountParams, m: int) -> list[tuple[int, int]]:
    """Discounted levels for intervals t_i, t_i+1, ... while they stay above psi.

    Level at offset k is floor(score * TimeDiscount(k * interval_length)).
    The run stops at the first level whose normalized value is below psi,
    and also at the first zero level so that psi = 0 cannot run forever.
    """
    if not 0 <= score <= m:
        raise ValueError(f"score {score} outside 0..{m}")
    out = []
    k = 0
    while True:
        level = math.floor(score * time_discount(k * params.interval_length, params))
        if level == 0 or Fraction(level, m) < params.psi:
            return out
        out.append((t_i + k, level))
        k += 1


@dataclass
class FeedbackStore:
    m: int = 10
    records: dict = field(default_factory=dict)  # vehicle -> ReputationRecord
    log: list = field(default_factory=list)  # dicts, LOG_FIELDS order
    pending: dict = field(default_factory=dict)  # vehicle -> [Feedback]

    # -- mutation; every change goes through _apply so replay is exact

    def register(self, vehicle: str, score: int, interval: int = 0) -> ReputationRecord:
        if vehicle in self.records:
            raise ValueError(f"vehicle {vehicle!r} already has a record")
        if not 0 <= score <= self.m:
            raise ValueError("initial score outside the level range")
        self._append("register", vehicle, score, interval, None)
        return self.records[vehicle]

    def add_feedback(self, fb: Feedback) -> None:
        if fb.target not in self.records:
            raise UnknownMember(fb.target)
        self._append("feedback", fb.target, fb.value, fb.interval, fb.reporter)

    def aggregate(self, vehicle: str, interval: int | None = None) -> int:
        """Fold pending feedback for ``vehicle`` into its score and return it."""
        if vehicle not in self.records:
            raise UnknownMember(vehicle)
        rec = self.records[vehicle]
        if not self.pending.get(vehicle):
            return rec.score
        new = aggregate_rule(rec.score, [fb.value for fb in self.pending[vehicle]], self.m)
        when = interval if interval is not None else max(fb.interval for fb in self.pending[vehicle])
        self._append("aggregate", vehicle, new, when, None)
        return new

    def aggregate_all(self, interval: int | None = None) -> dict:
        return {v: self.aggregate(v, interval) for v in sorted(self.records)}

    def _append(self, kind, vehicle, value, interval, reporter) -> None:
        entry = dict(zip(LOG_FIELDS, (kind, vehicle, value, interval, reporter)))
        self._apply(entry)
        self.log.append(entry)

    def _apply(self, entry: dict) -> None:
        kind, vehicle, value, interval, reporter = (entry[k] for k in LOG_FIELDS)
        if kind == "register":
            self.records[vehicle] = ReputationRecord(vehicle, value, interval)
            self.pending[vehicle] = []
        elif kind == "feedback":
            self.pending[vehicle].append(Feedback(vehicle, reporter, value, interval))
        elif kind == "aggregate":
            rec = self.records[vehicle]
            rec.score = value
            rec.last_update = interval
            self.pending[vehicle] = []
        else:
            raise ValueError(f"unknown log kind {kind!r}")

    # -- queries

    def score(self, vehicle: str) -> int:
        if vehicle not in self.records:
            raise UnknownMember(vehicle)
        return self.records[vehicle].score

    def feedback_entries(self):
        for entry in self.log:
            if entry["kind"] == "feedback":
                yield Feedback(entry["vehicle"], entry["reporter"], entry["value"], entry["interval"])

    def detect(self, window: int, now: int | None = None) -> set:
        """Vehicles with >= 5 reports in (now - window, now], majority negative."""
        if window < 1:
            raise ValueError("window must be at least one interval")
        entries = list(self.feedback_entries())
        if now is None:
            now = max((fb.interval for fb in entries), default=0)
        counts: dict = {}
        for fb in entries:
            if now - window < fb.interval <= now:
                total, neg = counts.get(fb.target, (0, 0))
                counts[fb.target] = (total + 1, neg + (fb.value == NEGATIVE))
        return {v for v, (total, neg) in counts.items() if total >= DETECT_MIN_REPORTS and 2 * neg > total}

    def table(self) -> list[dict]:
        return [
            {"vehicle": r.vehicle, "score": r.score, "last_update": r.last_update}
            for r in sorted(self.records.values(), key=lambda r: r.vehicle)
        ]

    @classmethod
    def replay(cls, log: list, m: int) -> "FeedbackStore":
        store = cls(m=m)
        for entry in log:
            store._apply(entry)
            store.log.append(entry)
        return store


def aggregate_rule(old: int, values: list[int], m: int) -> int:
    delta = sum(AGGR_REWARD if f == POSITIVE else -AGGR_PENALTY for f in values)
    return max(0, min(m, old + delta))


def aggregate(store: FeedbackStore, vehicle: str) -> int:
    return store.aggregate(vehicle)


def detect(store: FeedbackStore, window: int, now: int | None = None) -> set:
    return store.detect(window, now)


# ---------------------------------------------------------------- persistence


def persist(store: FeedbackStore, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(e, separators=(",", ":")) for e in store.log]
    _atomic_write(directory / "log.jsonl", "".join(line + "\n" for line in lines))
    snapshot = {"format": SNAPSHOT_FORMAT, "m": store.m, "entries": len(store.log), "records": store.table()}
    _atomic_write(directory / "snapshot.json", json.dumps(snapshot, indent=2) + "\n")
    return directory


def restore(directory) -> FeedbackStore:
    """Rebuild a store from its log and cross-check it against the snapshot."""
    directory = Path(directory)
    snap_path, log_path = directory / "snapshot.json", directory / "log.jsonl"
    try:
        snapshot = json.loads(snap_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptStore(f"unreadable snapshot: {exc}", snap_path) from exc
    if not isinstance(snapshot, dict) or snapshot.get("format") != SNAPSHOT_FORMAT:
        raise CorruptStore(f"snapshot format tag is not {SNAPSHOT_FORMAT!r}", snap_path)
    try:
        text = log_path.read_text()
    except OSError as exc:
        raise CorruptStore(f"unreadable log: {exc}", log_path) from exc
    if text and not text.endswith("\n"):
        raise CorruptStore("log ends mid-record (truncated)", log_path, text.count("\n") + 1)

    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptStore(f"bad JSON at column {exc.colno}", log_path, lineno) from exc
        if not isinstance(entry, dict) or tuple(entry) != LOG_FIELDS or entry["kind"] not in LOG_KINDS:
            raise CorruptStore("record does not match the log schema", log_path, lineno)
        entries.append((lineno, entry))

    store = FeedbackStore(m=snapshot.get("m", 10))
    for lineno, entry in entries:
        try:
            _check_entry(store, entry)
            store._apply(entry)
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptStore(f"record cannot be replayed: {exc}", log_path, lineno) from exc
        store.log.append(entry)
    if snapshot.get("entries") != len(store.log) or snapshot.get("records") != store.table():
        raise CorruptStore("snapshot disagrees with the replayed log", snap_path)
    return store


def _check_entry(store: FeedbackStore, entry: dict) -> None:
    kind, vehicle, value = entry["kind"], entry["vehicle"], entry["value"]
    if not isinstance(entry["interval"], int):
        raise ValueError("interval must be an integer")
    if kind == "register" and vehicle in store.records:
        raise ValueError(f"duplicate registration of {vehicle!r}")
    if kind != "register" and vehicle not in store.records:
        raise KeyError(vehicle)
    if kind == "feedback" and value not in (POSITIVE, NEGATIVE):
        raise ValueError("feedback value must be +1 or -1")
    if kind in ("register", "aggregate") and not (isinstance(value, int) and 0 <= value <= store.m):
        raise ValueError("score outside the level range")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
