"""Stream operators: key extraction, bounded-queue union, window aggregation.

Two aggregation operators are provided.  ``aggregate_sliding`` is the
classic count-based batch: every ``window`` tuples are grouped by key and
emitted together.  ``aggregate_swa`` keeps one small fixed-capacity window
per key: a window opens when the first tuple of its key arrives, closes
when it reaches ``capacity`` tuples (reason ``full``) or when its age
exceeds ``timeout_s`` (reason ``timeout``), and is emitted immediately on
close.  Timeouts are detected by sweeps that run on every arrival and every
100 ms of event time, so a window's close timestamp never depends on how
long the stream stays silent afterwards.

Operators never see ground-truth labels; they work on
:class:`~swakit.trace.StreamTuple` and key only on head id, instance
timestamp, and user id.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

from .errors import ConfigError
from .params import WindowParams
from .queueing import buffer_capacity
from .trace import StreamTuple, Trace, replay

__all__ = [
    "Strategy",
    "extract_key",
    "BoundedQueueSpec",
    "BoundedQueue",
    "OperatorStats",
    "EmittedInstance",
    "union",
    "aggregate_swa",
    "aggregate_sliding",
    "PipelineConfig",
    "PipelineResult",
    "run_pipeline",
    "write_emissions",
    "read_emissions",
    "EMITTED_HEADER",
]

SWEEP_MS = 100

EMITTED_HEADER = ["key", "k", "close_reason", "closed_at_ms", "avg_response_ms", "span_ms"]


class Strategy(Enum):
    """Association strategy: which tuple fields form the window key."""

    HEAD = "head"
    HEAD_TS = "head_ts"
    HEAD_IP = "head_ip"
    HEAD_TS_IP = "head_ts_ip"

    @property
    def key_arity(self) -> int:
        return {"head": 1, "head_ts": 2, "head_ip": 2, "head_ts_ip": 3}[self.value]

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        try:
            return cls(name)
        except ValueError:
            raise ConfigError(
                f"unknown strategy {name!r}, expected one of "
                f"{[s.value for s in cls]}"
            ) from None


def extract_key(t: StreamTuple, strategy: Strategy) -> tuple:
    """Build the association key for a tuple under the given strategy."""
    if strategy is Strategy.HEAD:
        return (t.head_id,)
    if strategy is Strategy.HEAD_TS:
        return (t.head_id, t.instance_timestamp)
    if strategy is Strategy.HEAD_IP:
        return (t.head_id, t.user_id)
    if strategy is Strategy.HEAD_TS_IP:
        return (t.head_id, t.instance_timestamp, t.user_id)
    raise ConfigError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# bounded queue
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundedQueueSpec:
    """Page-backed queue sizing: capacity = pages * floor(page_size / tuple_size).

    ``capacity_override`` replaces the derived figure (used to model the
    per-page bookkeeping overhead that lowers the raw capacity in practice).
    """

    pages: int = 10
    page_size: int = 1024
    tuple_size: int = 135
    capacity_override: Optional[int] = None

    def __post_init__(self):
        if self.pages < 1 or self.page_size < 1 or self.tuple_size < 1:
            raise ConfigError("pages, page_size and tuple_size must all be >= 1")
        if self.capacity_override is not None and self.capacity_override < 1:
            raise ConfigError("capacity_override must be >= 1")

    @property
    def capacity(self) -> int:
        if self.capacity_override is not None:
            return self.capacity_override
        cap = buffer_capacity(self.pages, self.page_size, self.tuple_size)
        if cap < 1:
            raise ConfigError(
                f"tuple_size {self.tuple_size} exceeds page_size {self.page_size}: "
                "queue capacity would be 0"
            )
        return cap


class BoundedQueue:
    """Drop-newest bounded FIFO. ``offer`` returns False when the item is dropped."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"queue capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items = deque()
        self.dropped = 0

    def __len__(self):
        return len(self._items)

    def offer(self, item) -> bool:
        if len(self._items) >= self.capacity:
            self.dropped += 1
            return False
        self._items.append(item)
        return True

    def take(self):
        return self._items.popleft()


# ---------------------------------------------------------------------------
# operator statistics
# ---------------------------------------------------------------------------


@dataclass
class OperatorStats:
    """Per-operator accounting sampled at arrivals and emissions.

    ``occupancy`` is sampled at every arrival: queue fill for the union,
    resident tuples for the sliding buffer, open windows for the keyed
    aggregate.  ``storage_bytes`` is the matching storage estimate
    (occupancy * tuple_size, or windows * capacity * tuple_size for the
    keyed aggregate).  ``residence_ms`` collects one sample per emission.
    """

    name: str
    tuples_in: int = 0
    tuples_out: int = 0
    tuples_dropped: int = 0
    resident: int = 0
    occupancy: list = field(default_factory=list)
    storage_bytes: list = field(default_factory=list)
    residence_ms: list = field(default_factory=list)

    def _avg(self, xs):
        return sum(xs) / len(xs) if xs else 0.0

    @property
    def occupancy_avg(self):
        return self._avg(self.occupancy)

    @property
    def occupancy_max(self):
        return max(self.occupancy) if self.occupancy else 0

    @property
    def storage_avg(self):
        return self._avg(self.storage_bytes)

    @property
    def storage_max(self):
        return max(self.storage_bytes) if self.storage_bytes else 0

    @property
    def residence_avg_ms(self):
        return self._avg(self.residence_ms)

    def check_conservation(self):
        if self.tuples_in != self.tuples_out + self.tuples_dropped + self.resident:
            raise AssertionError(
                f"{self.name}: conservation violated: in={self.tuples_in} "
                f"out={self.tuples_out} dropped={self.tuples_dropped} "
                f"resident={self.resident}"
            )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "tuples_in": self.tuples_in,
            "tuples_out": self.tuples_out,
            "tuples_dropped": self.tuples_dropped,
            "occupancy_avg": self.occupancy_avg,
            "occupancy_max": self.occupancy_max,
            "storage_avg_bytes": self.storage_avg,
            "storage_max_bytes": self.storage_max,
            "residence_avg_ms": self.residence_avg_ms,
        }


# ---------------------------------------------------------------------------
# union
# ---------------------------------------------------------------------------


def union(feeds: Sequence[Sequence[StreamTuple]], queue_spec: BoundedQueueSpec):
    """Merge partition feeds in timestamp order through a bounded queue.

    Ties are broken by partition index, then input order (the feeds from
    :func:`~swakit.trace.replay` already carry that order in ``seq``).  The
    consumer keeps pace in event-time replay, so the queue drains after
    every arrival; drops can only occur under an artificially stalled
    consumer, which is exercised directly on :class:`BoundedQueue` in tests.
    """
    stats = OperatorStats("union")
    q = BoundedQueue(queue_spec.capacity)
    merged = sorted((t for feed in feeds for t in feed), key=lambda t: t.seq)
    out = []
    for t in merged:
        stats.tuples_in += 1
        stats.occupancy.append(len(q))
        stats.storage_bytes.append(len(q) * queue_spec.tuple_size)
        if q.offer(t):
            out.append(q.take())
            stats.tuples_out += 1
            stats.residence_ms.append(0.0)
        else:
            stats.tuples_dropped += 1
    stats.resident = len(q)
    stats.check_conservation()
    return out, stats


# ---------------------------------------------------------------------------
# emissions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmittedInstance:
    """One closed window/group: the operator's guess at a service instance."""

    key: tuple
    count: int
    close_reason: str  # full | timeout | batch
    opened_at: int
    closed_at: int
    first_ts: int
    last_ts: int
    response_avg: float
    response_min: int
    response_max: int
    member_seqs: Optional[tuple] = None

    @property
    def span_ms(self) -> int:
        return self.last_ts - self.first_ts


def _key_str(key) -> str:
    if isinstance(key, tuple):
        return "|".join(str(p) for p in key)
    return str(key)


def write_emissions(emissions, path, members_path=None) -> None:
    """Write the emitted-instance CSV (plus optional member-seq sidecar)."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EMITTED_HEADER)
        for e in emissions:
            w.writerow(
                [
                    _key_str(e.key),
                    e.count,
                    e.close_reason,
                    e.closed_at,
                    f"{e.response_avg:.6f}",
                    e.span_ms,
                ]
            )
    if members_path is not None:
        with open(members_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["emission", "seq"])
            for i, e in enumerate(emissions):
                for s in e.member_seqs or ():
                    w.writerow([i, s])


def read_emissions(path, members_path=None) -> list:
    """Read emissions back; member seqs only if a sidecar file is given."""
    import csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != EMITTED_HEADER:
            raise ConfigError(f"bad emissions header {header!r}")
        rows = list(r)
    members = {}
    if members_path is not None:
        with open(members_path, "r", encoding="utf-8", newline="") as fh:
            r = csv.reader(fh)
            next(r, None)
            for em, seq in r:
                members.setdefault(int(em), []).append(int(seq))
    out = []
    for i, row in enumerate(rows):
        key, k, reason, closed_at, avg_resp, span = row
        closed = int(closed_at)
        out.append(
            EmittedInstance(
                key=(key,),
                count=int(k),
                close_reason=reason,
                opened_at=closed - int(span),
                closed_at=closed,
                first_ts=closed - int(span),
                last_ts=closed,
                response_avg=float(avg_resp),
                response_min=0,
                response_max=0,
                member_seqs=tuple(members.get(i, ())) if members_path else None,
            )
        )
    return out


# ---------------------------------------------------------------------------
# keyed small-window aggregation
# ---------------------------------------------------------------------------


class _Window:
    __slots__ = ("key", "opened_at", "deadline", "seqs", "first_ts", "last_ts",
                 "resp_sum", "resp_min", "resp_max", "closed")

    def __init__(self, key, opened_at, timeout_ms):
        self.key = key
        self.opened_at = opened_at
        self.deadline = opened_at + timeout_ms
        self.seqs = []
        self.first_ts = None
        self.last_ts = None
        self.resp_sum = 0
        self.resp_min = None
        self.resp_max = None
        self.closed = False

    def add(self, t: StreamTuple):
        self.seqs.append(t.seq)
        if self.first_ts is None or t.timestamp < self.first_ts:
            self.first_ts = t.timestamp
        if self.last_ts is None or t.timestamp > self.last_ts:
            self.last_ts = t.timestamp
        self.resp_sum += t.response_time
        if self.resp_min is None or t.response_time < self.resp_min:
            self.resp_min = t.response_time
        if self.resp_max is None or t.response_time > self.resp_max:
            self.resp_max = t.response_time


def aggregate_swa(
    tuples: Sequence[StreamTuple],
    params: WindowParams,
    strategy: Strategy,
    tuple_size: int = 135,
    keep_members: bool = True,
):
    """Keyed fixed-capacity windows with timeout, one open window per key.

    The event clock is driven by tuple timestamps.  Expiry is strict: a
    window whose age exceeds ``timeout_s`` closes at the first sweep after
    its deadline, where sweeps happen at every arrival and every 100 ms
    boundary of event time.  A tuple arriving exactly at the deadline is
    still admitted.  End of stream flushes every open window with reason
    ``timeout``.
    """
    timeout_ms = params.timeout_s * 1000
    stats = OperatorStats("aggregate_swa")
    open_windows: dict = {}
    expiry = []  # heap of (deadline, seq#, window)
    counter = 0
    emissions: List[EmittedInstance] = []

    def emit(win: _Window, reason: str, closed_at: int):
        win.closed = True
        emissions.append(
            EmittedInstance(
                key=win.key,
                count=len(win.seqs),
                close_reason=reason,
                opened_at=win.opened_at,
                closed_at=closed_at,
                first_ts=win.first_ts,
                last_ts=win.last_ts,
                response_avg=win.resp_sum / len(win.seqs),
                response_min=win.resp_min,
                response_max=win.resp_max,
                member_seqs=tuple(win.seqs) if keep_members else None,
            )
        )
        stats.tuples_out += len(win.seqs)
        stats.residence_ms.append(float(closed_at - win.opened_at))

    def sweep(now: int):
        # close every window whose deadline passed strictly before `now`;
        # the recorded close time is the earliest sweep that saw it expired
        while expiry and expiry[0][0] < now:
            _, _, win = heapq.heappop(expiry)
            if win.closed:
                continue
            boundary = (win.deadline // SWEEP_MS + 1) * SWEEP_MS
            emit(win, "timeout", min(boundary, now))
            del open_windows[win.key]

    last_ts = None
    for t in tuples:
        sweep(t.timestamp)
        stats.tuples_in += 1
        stats.occupancy.append(len(open_windows))
        stats.storage_bytes.append(len(open_windows) * params.capacity * tuple_size)
        key = extract_key(t, strategy)
        win = open_windows.get(key)
        if win is None:
            win = _Window(key, t.timestamp, timeout_ms)
            open_windows[key] = win
            heapq.heappush(expiry, (win.deadline, counter, win))
            counter += 1
        win.add(t)
        if len(win.seqs) >= params.capacity:
            emit(win, "full", t.timestamp)
            del open_windows[key]
        last_ts = t.timestamp

    if last_ts is not None:
        sweep(last_ts)  # catch 100 ms boundaries between the final arrivals
        for _, _, win in sorted(expiry):
            if not win.closed:
                emit(win, "timeout", last_ts)
        open_windows.clear()
    stats.resident = 0
    stats.check_conservation()
    return emissions, stats


# ---------------------------------------------------------------------------
# count-based sliding batches
# ---------------------------------------------------------------------------


def aggregate_sliding(
    tuples: Sequence[StreamTuple],
    window: int,
    step: int,
    strategy: Strategy,
    tuple_size: int = 135,
    keep_members: bool = True,
):
    """Group every ``window``-tuple batch by key, advancing ``step`` tuples.

    With ``step == window`` this is plain tumbling batches (each tuple
    appears in exactly one batch); smaller steps re-deliver tuples into
    overlapping batches.  A final partial batch is emitted at end of
    stream.  Batch processing is modeled as a single service event: every
    group in a batch closes at the batch's last arrival.
    """
    if window < 1:
        raise ConfigError("window must be >= 1")
    if step < 1 or step > window:
        raise ConfigError("step must satisfy 1 <= step <= window")
    stats = OperatorStats("aggregate_sliding")
    buf: List[StreamTuple] = []
    emissions: List[EmittedInstance] = []
    emitted_seqs = set()

    def close_batch(batch):
        closed_at = max(t.timestamp for t in batch)
        groups: dict = {}
        for t in batch:
            groups.setdefault(extract_key(t, strategy), []).append(t)
        for key, members in groups.items():
            resp = [m.response_time for m in members]
            ts = [m.timestamp for m in members]
            emissions.append(
                EmittedInstance(
                    key=key,
                    count=len(members),
                    close_reason="batch",
                    opened_at=min(ts),
                    closed_at=closed_at,
                    first_ts=min(ts),
                    last_ts=max(ts),
                    response_avg=sum(resp) / len(resp),
                    response_min=min(resp),
                    response_max=max(resp),
                    member_seqs=tuple(m.seq for m in members) if keep_members else None,
                )
            )
            stats.residence_ms.append(closed_at - sum(ts) / len(ts))
            for m in members:
                emitted_seqs.add(m.seq)

    for t in tuples:
        stats.tuples_in += 1
        stats.occupancy.append(len(buf))
        stats.storage_bytes.append(len(buf) * tuple_size)
        buf.append(t)
        if len(buf) == window:
            close_batch(buf)
            buf = buf[step:]
    if buf:
        close_batch(buf)
    # a tuple can land in several overlapping batches; conservation is
    # accounted on distinct tuples
    stats.tuples_out = len(emitted_seqs)
    stats.resident = 0
    stats.check_conservation()
    return emissions, stats


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    """Declarative pipeline: queue sizing, aggregate choice, strategy."""

    queue: BoundedQueueSpec = field(default_factory=BoundedQueueSpec)
    kind: str = "swa"
    capacity: int = 13
    timeout_s: int = 22
    window: int = 32000
    step: int = 32000
    strategy: Strategy = Strategy.HEAD_TS_IP

    def __post_init__(self):
        if self.kind not in ("swa", "sliding"):
            raise ConfigError(f"aggregate kind must be 'swa' or 'sliding', got {self.kind!r}")
        if isinstance(self.strategy, str):
            self.strategy = Strategy.parse(self.strategy)

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        try:
            qdoc = doc.get("queue", {})
            adoc = doc["aggregate"]
            queue = BoundedQueueSpec(
                pages=int(qdoc.get("pages", 10)),
                page_size=int(qdoc.get("page_size", 1024)),
                tuple_size=int(qdoc.get("tuple_size", 135)),
                capacity_override=(
                    int(qdoc["capacity_override"]) if "capacity_override" in qdoc else None
                ),
            )
            return cls(
                queue=queue,
                kind=adoc.get("kind", "swa"),
                capacity=int(adoc.get("capacity", 13)),
                timeout_s=int(adoc.get("timeout_s", 22)),
                window=int(adoc.get("window", 32000)),
                step=int(adoc.get("step", adoc.get("window", 32000))),
                strategy=Strategy.parse(doc.get("strategy", "head_ts_ip")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad pipeline config: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "queue": {
                "pages": self.queue.pages,
                "page_size": self.queue.page_size,
                "tuple_size": self.queue.tuple_size,
                **(
                    {"capacity_override": self.queue.capacity_override}
                    if self.queue.capacity_override is not None
                    else {}
                ),
            },
            "aggregate": {
                "kind": self.kind,
                "capacity": self.capacity,
                "timeout_s": self.timeout_s,
                "window": self.window,
                "step": self.step,
            },
            "strategy": self.strategy.value,
        }

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"pipeline config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


@dataclass
class PipelineResult:
    emissions: list
    union_stats: OperatorStats
    aggregate_stats: OperatorStats


def run_pipeline(trace: Trace, cfg: PipelineConfig, keep_members: bool = True) -> PipelineResult:
    """Replay a trace through union and the configured aggregate."""
    feeds = replay(trace, mode="event-time")
    merged, ustats = union(feeds, cfg.queue)
    if cfg.kind == "swa":
        emissions, astats = aggregate_swa(
            merged,
            WindowParams(cfg.capacity, cfg.timeout_s),
            cfg.strategy,
            tuple_size=cfg.queue.tuple_size,
            keep_members=keep_members,
        )
    else:
        emissions, astats = aggregate_sliding(
            merged,
            cfg.window,
            cfg.step,
            cfg.strategy,
            tuple_size=cfg.queue.tuple_size,
            keep_members=keep_members,
        )
    return PipelineResult(emissions, ustats, astats)
