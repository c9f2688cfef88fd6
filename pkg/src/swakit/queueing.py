"""Performance prediction: exact finite-buffer chains, approximations, DES.

The exact solvers build the continuous-time Markov chain over (occupancy,
arrival phase, service phase), solve pi Q = 0 directly, and read the
indicators off the stationary vector.  Loss and busy-at-arrival
probabilities are arrival-weighted: a state's weight is its stationary
probability times the arrival-completion intensity of its arrival phase,
which is what an arriving tuple actually samples (PASTA only covers the
Poisson special case).

The discrete-event simulator is the independent oracle for all of them:
same model document, pre-drawn random streams, batch-means confidence
intervals.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve
from scipy import stats as sps

from .distributions import (
    PhaseTypeDist,
    PointMassDist,
    dist_from_dict,
    dist_to_dict,
    ph_from_mean_scv,
)
from .errors import (
    ConfigError,
    DistributionError,
    InstabilityError,
    NumericalError,
    StateSpaceError,
)

__all__ = [
    "MeanScv",
    "QueueModel",
    "PerfIndicators",
    "buffer_capacity",
    "min_servers",
    "storage_estimate",
    "solve_ph_ph_1_n",
    "solve_batch_ph_ph_1_n",
    "solve_ggc_approx",
    "solve_infinite_servers",
    "predict",
    "des_simulate",
    "model_to_dict",
    "model_from_dict",
    "load_model",
]

MAX_STATES = 100_000


# ---------------------------------------------------------------------------
# sizing helpers
# ---------------------------------------------------------------------------


def buffer_capacity(pages: int, page_size: int, tuple_size: int) -> int:
    """Tuples that fit in a page-backed buffer: pages * floor(page_size / tuple_size)."""
    if pages < 1 or page_size < 1 or tuple_size < 1:
        raise ConfigError("pages, page_size and tuple_size must all be >= 1")
    return pages * (page_size // tuple_size)


def min_servers(arrival_rate: float, service_rate: float) -> int:
    """Smallest server count c with arrival_rate / (c * service_rate) < 1."""
    if arrival_rate <= 0 or service_rate <= 0:
        raise ConfigError("rates must be positive")
    ratio = arrival_rate / service_rate
    c = int(math.floor(ratio)) + 1
    return c


def storage_estimate(servers: int, capacity: int, tuple_size: int) -> int:
    """Bytes needed to hold ``servers`` windows of ``capacity`` tuples each."""
    if servers < 1 or capacity < 1 or tuple_size < 1:
        raise ConfigError("servers, capacity and tuple_size must all be >= 1")
    return servers * capacity * tuple_size


# ---------------------------------------------------------------------------
# model document
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanScv:
    """Service law known only through mean and squared coefficient of variation."""

    mean: float
    scv: float

    def __post_init__(self):
        if self.mean <= 0:
            raise ConfigError("mean must be positive")
        if self.scv < 0:
            raise ConfigError("scv must be non-negative")


@dataclass
class QueueModel:
    """One queueing station: arrival law, service law, servers, buffer, batch.

    ``buffer`` bounds the number of tuples in the system (waiting plus in
    service); ``None`` means unbounded.  ``batch = (a, b)`` means service
    starts once ``a`` tuples wait and takes up to ``b`` at once; batching
    requires a single server, and the exact solver additionally requires
    a == b.
    """

    arrival: object
    service: object
    servers: object = 1  # positive int or "ample"
    buffer: Optional[int] = None
    batch: Tuple[int, int] = (1, 1)

    def __post_init__(self):
        a, b = self.batch
        if a < 1 or b < a:
            raise ConfigError(f"batch bounds must satisfy 1 <= a <= b, got {self.batch}")
        if self.servers != "ample":
            if not isinstance(self.servers, int) or self.servers < 1:
                raise ConfigError(f"servers must be a positive integer or 'ample', got {self.servers!r}")
        if (a, b) != (1, 1) and self.servers != 1:
            raise ConfigError("batch service requires exactly one server")
        if self.buffer is not None:
            if self.buffer < 1:
                raise ConfigError("buffer must be >= 1 or unbounded")
            if a > self.buffer:
                raise ConfigError(
                    f"batch threshold {a} exceeds buffer {self.buffer}: service could never start"
                )


def model_to_dict(model: QueueModel) -> dict:
    svc = (
        {"mean": model.service.mean, "scv": model.service.scv}
        if isinstance(model.service, MeanScv)
        else dist_to_dict(model.service)
    )
    return {
        "arrival": dist_to_dict(model.arrival),
        "service": svc,
        "servers": model.servers,
        "buffer": "unbounded" if model.buffer is None else model.buffer,
        "batch": list(model.batch),
    }


def model_from_dict(doc: dict) -> QueueModel:
    try:
        arrival = dist_from_dict(doc["arrival"])
        sdoc = doc["service"]
        if isinstance(sdoc, dict) and "type" in sdoc:
            service = dist_from_dict(sdoc)
        elif isinstance(sdoc, dict) and "mean" in sdoc:
            service = MeanScv(float(sdoc["mean"]), float(sdoc.get("scv", 1.0)))
        else:
            raise ConfigError(f"bad service spec {sdoc!r}")
        servers = doc.get("servers", 1)
        if servers != "ample":
            servers = int(servers)
        buffer = doc.get("buffer", "unbounded")
        buffer = None if buffer == "unbounded" else int(buffer)
        batch = tuple(int(v) for v in doc.get("batch", (1, 1)))
        return QueueModel(arrival, service, servers, buffer, batch)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad queue model document: {exc}") from exc


def load_model(path) -> QueueModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return model_from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"queue model is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# indicators
# ---------------------------------------------------------------------------


@dataclass
class PerfIndicators:
    """The six standard station indicators (plus optional CI half-widths)."""

    L: float
    Lq: float
    W: float
    Wq: float
    Pbusy: float
    Ploss: float
    ci: Optional[dict] = None

    def to_dict(self) -> dict:
        out = {
            "L": self.L,
            "Lq": self.Lq,
            "W": self.W,
            "Wq": self.Wq,
            "Pbusy": self.Pbusy,
            "Ploss": self.Ploss,
        }
        if self.ci is not None:
            out["ci95"] = dict(self.ci)
        return out


def _service_mean_scv(service) -> Tuple[float, float]:
    if isinstance(service, MeanScv):
        return service.mean, service.scv
    return service.mean(), service.scv()


def _as_ph(dist, what: str) -> PhaseTypeDist:
    if isinstance(dist, PhaseTypeDist):
        if not dist.is_valid_generator():
            raise DistributionError(
                f"{what} generator is structurally invalid; run validate_generator first"
            )
        return dist
    if isinstance(dist, MeanScv):
        if dist.scv == 0:
            raise ConfigError(f"{what}: zero-variance law is not phase-type; use a small scv")
        return ph_from_mean_scv(dist.mean, dist.scv)
    if isinstance(dist, PointMassDist):
        raise ConfigError(f"{what}: point mass is not phase-type; the exact solver cannot use it")
    if hasattr(dist, "as_phase_type"):
        return dist.as_phase_type()
    raise ConfigError(f"{what}: cannot interpret {type(dist).__name__} as phase-type")


def _arrival_ph(model: QueueModel) -> PhaseTypeDist:
    ph = _as_ph(model.arrival, "arrival")
    if abs(ph.alpha.sum() - 1.0) > 1e-9:
        raise ConfigError("arrival process must have alpha summing to 1 (no mass at zero)")
    return ph


def _solve_stationary(rows, cols, vals, size) -> np.ndarray:
    """Solve pi Q = 0, sum(pi) = 1 from COO triplets of Q; checks the residual."""
    if size > MAX_STATES:
        raise StateSpaceError(
            f"state space has {size} states, direct solve capped at {MAX_STATES}"
        )
    Q = csr_matrix((vals, (rows, cols)), shape=(size, size))
    A = Q.transpose().tolil()
    A[-1, :] = 1.0
    b = np.zeros(size)
    b[-1] = 1.0
    try:
        pi = spsolve(csr_matrix(A), b)
    except Exception as exc:  # SuperLU raises various types
        raise NumericalError(f"stationary solve failed: {exc}") from exc
    if not np.all(np.isfinite(pi)):
        raise NumericalError("stationary solve produced non-finite probabilities")
    pi = np.maximum(pi, 0.0)
    s = pi.sum()
    if s <= 0:
        raise NumericalError("stationary solve produced a zero vector")
    pi = pi / s
    resid = np.abs(pi @ Q).max()
    if resid > 1e-8:
        raise NumericalError(f"stationary residual {resid:g} too large")
    return pi


# ---------------------------------------------------------------------------
# exact single-service chain
# ---------------------------------------------------------------------------


def solve_ph_ph_1_n(model: QueueModel) -> PerfIndicators:
    """Exact PH/PH/1/N: levels 0..N, arrival phase, service phase.

    The buffer bounds the number in system; an arrival that completes while
    the system holds N tuples is lost and the arrival process renews.
    """
    if model.servers != 1 or model.batch != (1, 1):
        raise ConfigError("solve_ph_ph_1_n handles exactly one server and no batching")
    if model.buffer is None:
        raise ConfigError("solve_ph_ph_1_n needs a finite buffer")
    ap = _arrival_ph(model)
    sp = _as_ph(model.service, "service")
    N = model.buffer
    m, n = ap.order, sp.order
    Ta, Ta0, aa = ap.T, ap.exit_rates, ap.alpha
    Ts, Ts0, as_ = sp.T, sp.exit_rates, sp.alpha

    size = m + N * m * n

    def idx0(i):
        return i

    def idx(l, i, j):
        return m + (l - 1) * m * n + i * n + j

    rows, cols, vals = [], [], []

    def add(r, c, v):
        if v != 0.0:
            rows.append(r)
            cols.append(c)
            vals.append(v)
            rows.append(r)
            cols.append(r)
            vals.append(-v)

    for i in range(m):
        for i2 in range(m):
            if i2 != i and Ta[i, i2] != 0.0:
                add(idx0(i), idx0(i2), Ta[i, i2])
        if Ta0[i] > 0.0:
            for i2 in range(m):
                for j in range(n):
                    add(idx0(i), idx(1, i2, j), Ta0[i] * aa[i2] * as_[j])

    for l in range(1, N + 1):
        for i in range(m):
            for j in range(n):
                s = idx(l, i, j)
                for i2 in range(m):
                    if i2 != i and Ta[i, i2] != 0.0:
                        add(s, idx(l, i2, j), Ta[i, i2])
                if Ta0[i] > 0.0:
                    for i2 in range(m):
                        tgt_l = l + 1 if l < N else l  # at capacity: lost, renew phase
                        add(s, idx(tgt_l, i2, j), Ta0[i] * aa[i2])
                for j2 in range(n):
                    if j2 != j and Ts[j, j2] != 0.0:
                        add(s, idx(l, i, j2), Ts[j, j2])
                if Ts0[j] > 0.0:
                    if l == 1:
                        add(s, idx0(i), Ts0[j])
                    else:
                        for j2 in range(n):
                            add(s, idx(l - 1, i, j2), Ts0[j] * as_[j2])

    pi = _solve_stationary(rows, cols, vals, size)

    level = np.empty(size)
    level[:m] = 0
    for l in range(1, N + 1):
        base = m + (l - 1) * m * n
        level[base : base + m * n] = l
    aphase = np.empty(size, dtype=int)
    aphase[:m] = np.arange(m)
    for l in range(1, N + 1):
        base = m + (l - 1) * m * n
        aphase[base : base + m * n] = np.repeat(np.arange(m), n)

    L = float(level @ pi)
    Lq = float(np.maximum(level - 1, 0) @ pi)
    w = Ta0[aphase] * pi
    wt = w.sum()
    Ploss = float(w[level == N].sum() / wt)
    Pbusy = float(w[level >= 1].sum() / wt)
    lam = 1.0 / ap.mean()
    lam_acc = lam * (1.0 - Ploss)
    W = L / lam_acc
    Wq = W - sp.mean()
    return PerfIndicators(L, Lq, W, Wq, Pbusy, Ploss)


# ---------------------------------------------------------------------------
# exact fixed-batch chain
# ---------------------------------------------------------------------------


def solve_batch_ph_ph_1_n(model: QueueModel) -> PerfIndicators:
    """Exact single-server chain with fixed batch size K = a = b.

    Service starts the moment K tuples wait and always takes exactly K;
    the buffer still bounds the total number in system (waiting plus the
    K in service), which makes K = 1 coincide with :func:`solve_ph_ph_1_n`.
    """
    a, b = model.batch
    if model.servers != 1:
        raise ConfigError("batch solver handles exactly one server")
    if a != b:
        raise ConfigError("exact batch solver requires a == b (use des_simulate for a < b)")
    if model.buffer is None:
        raise ConfigError("batch solver needs a finite buffer")
    K = a
    N = model.buffer
    ap = _arrival_ph(model)
    sp = _as_ph(model.service, "service")
    m, n = ap.order, sp.order
    Ta, Ta0, aa = ap.T, ap.exit_rates, ap.alpha
    Ts, Ts0, as_ = sp.T, sp.exit_rates, sp.alpha

    qmax = N - K  # waiting room while a batch is in service
    n_idle = K * m
    size = n_idle + (qmax + 1) * m * n

    def idle(q, i):
        return q * m + i

    def busy(q, i, j):
        return n_idle + q * m * n + i * n + j

    rows, cols, vals = [], [], []

    def add(r, c, v):
        if v != 0.0:
            rows.append(r)
            cols.append(c)
            vals.append(v)
            rows.append(r)
            cols.append(r)
            vals.append(-v)

    for q in range(K):
        for i in range(m):
            s = idle(q, i)
            for i2 in range(m):
                if i2 != i and Ta[i, i2] != 0.0:
                    add(s, idle(q, i2), Ta[i, i2])
            if Ta0[i] > 0.0:
                for i2 in range(m):
                    if q + 1 == K:
                        for j in range(n):
                            add(s, busy(0, i2, j), Ta0[i] * aa[i2] * as_[j])
                    else:
                        add(s, idle(q + 1, i2), Ta0[i] * aa[i2])

    for q in range(qmax + 1):
        for i in range(m):
            for j in range(n):
                s = busy(q, i, j)
                for i2 in range(m):
                    if i2 != i and Ta[i, i2] != 0.0:
                        add(s, busy(q, i2, j), Ta[i, i2])
                if Ta0[i] > 0.0:
                    for i2 in range(m):
                        tq = q + 1 if q < qmax else q  # full system: tuple lost
                        add(s, busy(tq, i2, j), Ta0[i] * aa[i2])
                for j2 in range(n):
                    if j2 != j and Ts[j, j2] != 0.0:
                        add(s, busy(q, i, j2), Ts[j, j2])
                if Ts0[j] > 0.0:
                    if q >= K:
                        for j2 in range(n):
                            add(s, busy(q - K, i, j2), Ts0[j] * as_[j2])
                    else:
                        add(s, idle(q, i), Ts0[j])

    pi = _solve_stationary(rows, cols, vals, size)

    sysn = np.empty(size)
    waitn = np.empty(size)
    aphase = np.empty(size, dtype=int)
    for q in range(K):
        for i in range(m):
            s = idle(q, i)
            sysn[s] = q
            waitn[s] = q
            aphase[s] = i
    for q in range(qmax + 1):
        for i in range(m):
            for j in range(n):
                s = busy(q, i, j)
                sysn[s] = q + K
                waitn[s] = q
                aphase[s] = i

    L = float(sysn @ pi)
    Lq = float(waitn @ pi)
    w = Ta0[aphase] * pi
    wt = w.sum()
    full = sysn >= N
    Ploss = float(w[full].sum() / wt)
    Pbusy = float(w[n_idle:].sum() / wt)
    lam = 1.0 / ap.mean()
    lam_acc = lam * (1.0 - Ploss)
    Wq = Lq / lam_acc
    W = Wq + sp.mean()
    return PerfIndicators(L, Lq, W, Wq, Pbusy, Ploss)


# ---------------------------------------------------------------------------
# many-server approximation
# ---------------------------------------------------------------------------


def _erlang_c(servers: int, offered: float) -> float:
    """Wait probability in M/M/c, via the numerically stable B-recursion."""
    B = 1.0
    for k in range(1, servers + 1):
        B = offered * B / (k + offered * B)
    rho = offered / servers
    return B / (1.0 - rho * (1.0 - B))


def solve_ggc_approx(
    arrival_rate: float,
    ca2: float,
    service_mean: float,
    cs2: float,
    servers: int,
) -> PerfIndicators:
    """G/G/c delay approximation: M/M/c wait scaled by (ca2 + cs2) / 2.

    Exact for Poisson arrivals with exponential service.  Raises an
    instability error (with the smallest workable server count) when the
    offered load meets or exceeds capacity.
    """
    if arrival_rate <= 0 or service_mean <= 0:
        raise ConfigError("arrival_rate and service_mean must be positive")
    if ca2 < 0 or cs2 < 0:
        raise ConfigError("squared coefficients of variation must be >= 0")
    if servers < 1:
        raise ConfigError("servers must be >= 1")
    offered = arrival_rate * service_mean
    rho = offered / servers
    if rho >= 1.0:
        need = min_servers(arrival_rate, 1.0 / service_mean)
        raise InstabilityError(
            f"offered load {offered:.4f} needs more than {servers} servers "
            f"(rho = {rho:.4f}); at least {need} required",
            suggested_servers=need,
        )
    pwait = _erlang_c(servers, offered)
    wq_mmc = pwait * service_mean / (servers * (1.0 - rho))
    Wq = wq_mmc * (ca2 + cs2) / 2.0
    W = Wq + service_mean
    return PerfIndicators(
        L=arrival_rate * W,
        Lq=arrival_rate * Wq,
        W=W,
        Wq=Wq,
        Pbusy=pwait,
        Ploss=0.0,
    )


def solve_infinite_servers(arrival_rate: float, service_mean: float) -> PerfIndicators:
    """Ample servers: no waiting, L = arrival_rate * service_mean."""
    if arrival_rate <= 0 or service_mean <= 0:
        raise ConfigError("arrival_rate and service_mean must be positive")
    return PerfIndicators(
        L=arrival_rate * service_mean,
        Lq=0.0,
        W=service_mean,
        Wq=0.0,
        Pbusy=0.0,
        Ploss=0.0,
    )


def predict(model: QueueModel) -> PerfIndicators:
    """Dispatch a model to the matching solver.

    Finite-buffer single-server models go to the exact chains; unbounded
    single-server and multi-server models go to the delay approximation;
    ``ample`` means infinite servers.
    """
    lam = 1.0 / model.arrival.mean()
    smean, sscv = _service_mean_scv(model.service)
    if model.servers == "ample":
        return solve_infinite_servers(lam, smean)
    if model.servers == 1:
        if model.buffer is not None:
            if model.batch == (1, 1):
                return solve_ph_ph_1_n(model)
            return solve_batch_ph_ph_1_n(model)
        if model.batch != (1, 1):
            raise ConfigError("unbounded batch model has no analytic solver; use des_simulate")
        return solve_ggc_approx(lam, model.arrival.scv(), smean, sscv, 1)
    if model.buffer is not None:
        raise ConfigError(
            "finite-buffer multi-server models have no analytic solver here; use des_simulate"
        )
    return solve_ggc_approx(lam, model.arrival.scv(), smean, sscv, model.servers)


# ---------------------------------------------------------------------------
# discrete-event simulation oracle
# ---------------------------------------------------------------------------


def _draw_times(dist, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw positive durations from a distribution object or a MeanScv spec."""
    if isinstance(dist, MeanScv):
        if dist.scv == 0:
            return np.full(count, dist.mean)
        shape = 1.0 / dist.scv
        return rng.gamma(shape=shape, scale=dist.mean / shape, size=count)
    return np.asarray(dist.sample(count, rng), dtype=float)


class _SliceArea:
    """Time-integrated occupancy split into equal slices for batch means."""

    def __init__(self, t0: float, t1: float, slices: int):
        if t1 <= t0:
            t1 = t0 + 1e-9
        self.t0 = t0
        self.t1 = t1
        self.dt = (t1 - t0) / slices
        self.area = np.zeros(slices)
        self.slices = slices

    def add(self, u: float, v: float, n: int):
        if n == 0 or v <= self.t0 or u >= self.t1:
            return
        u = max(u, self.t0)
        v = min(v, self.t1)
        if v <= u:
            return
        s0 = min(int((u - self.t0) / self.dt), self.slices - 1)
        s1 = min(int((v - self.t0) / self.dt), self.slices - 1)
        if s0 == s1:
            self.area[s0] += n * (v - u)
            return
        self.area[s0] += n * (self.t0 + (s0 + 1) * self.dt - u)
        for s in range(s0 + 1, s1):
            self.area[s] += n * self.dt
        self.area[s1] += n * (v - (self.t0 + s1 * self.dt))

    def mean(self) -> float:
        return float(self.area.sum() / (self.t1 - self.t0))

    def batch_means(self) -> np.ndarray:
        return self.area / self.dt


def _ci_half(samples: np.ndarray) -> float:
    k = len(samples)
    if k < 2 or np.allclose(samples, samples[0]):
        return 0.0
    return float(sps.t.ppf(0.975, k - 1) * samples.std(ddof=1) / math.sqrt(k))


def _batched_mean_ci(values: np.ndarray, n_batches: int) -> Tuple[float, float]:
    if values.size == 0:
        return 0.0, 0.0
    mean = float(values.mean())
    if values.size < n_batches * 2:
        return mean, 0.0
    chunks = np.array_split(values, n_batches)
    bm = np.array([c.mean() for c in chunks])
    return mean, _ci_half(bm)


def des_simulate(
    model: QueueModel,
    arrivals: int,
    seed: int,
    warmup_frac: float = 0.05,
    n_batches: int = 25,
) -> PerfIndicators:
    """Event-driven simulation of a queue model; the oracle the solvers answer to.

    Generates ``arrivals`` arrivals, drops the first ``warmup_frac`` of them
    from every statistic, and reports batch-means 95% confidence half-widths
    in ``ci``.  All randomness comes from ``seed``; identical calls return
    identical results.
    """
    if arrivals < 100:
        raise ConfigError("need at least 100 arrivals for meaningful statistics")
    if not (0.0 <= warmup_frac < 0.5):
        raise ConfigError("warmup_frac must lie in [0, 0.5)")
    if n_batches < 20:
        raise ConfigError("need at least 20 batches for the confidence intervals")
    rng = np.random.default_rng(seed)
    gaps = _draw_times(model.arrival, arrivals, rng)
    if np.any(gaps < 0):
        raise ConfigError("arrival law produced negative gaps")
    at = np.cumsum(gaps)
    svc = _draw_times(model.service, arrivals, rng)

    w0 = int(arrivals * warmup_frac)
    t_warm = at[w0] if w0 > 0 else 0.0
    t_end = at[-1]
    a, b = model.batch

    if model.servers == "ample":
        resid = svc
        dep = at + svc
        area = _SliceArea(t_warm, t_end, n_batches)
        events = sorted([(float(t), +1) for t in at] + [(float(d), -1) for d in dep])
        n_now = 0
        t_prev = 0.0
        for t, d in events:
            area.add(t_prev, t, n_now)
            n_now += d
            t_prev = t
        Wm, Wc = _batched_mean_ci(resid[w0:], n_batches)
        return PerfIndicators(
            L=area.mean(),
            Lq=0.0,
            W=Wm,
            Wq=0.0,
            Pbusy=0.0,
            Ploss=0.0,
            ci={"L": _ci_half(area.batch_means()), "Lq": 0.0, "W": Wc, "Wq": 0.0},
        )

    c = model.servers
    N = model.buffer
    area_sys = _SliceArea(t_warm, t_end, n_batches)
    area_q = _SliceArea(t_warm, t_end, n_batches)

    res_samples = np.full(arrivals, np.nan)
    wq_samples = np.full(arrivals, np.nan)
    busy_obs = np.zeros(arrivals, dtype=bool)
    lost_obs = np.zeros(arrivals, dtype=bool)

    if (a, b) == (1, 1):
        busy_heap: list = []  # departure times
        queue: list = []  # (arrival_time, index)
        qhead = 0
        n_sys = 0
        svc_i = 0
        t_prev = 0.0

        def integrate(t):
            nonlocal t_prev
            area_sys.add(t_prev, t, n_sys)
            area_q.add(t_prev, t, len(queue) - qhead)
            t_prev = t

        for i in range(arrivals):
            t = at[i]
            while busy_heap and busy_heap[0] <= t:
                tc = heapq.heappop(busy_heap)
                integrate(tc)
                n_sys -= 1
                if qhead < len(queue):
                    qa, qi = queue[qhead]
                    qhead += 1
                    wq_samples[qi] = tc - qa
                    d = tc + svc[svc_i]
                    svc_i += 1
                    res_samples[qi] = d - qa
                    heapq.heappush(busy_heap, d)
            integrate(t)
            busy_obs[i] = len(busy_heap) >= c
            if N is not None and n_sys >= N:
                lost_obs[i] = True
                continue
            n_sys += 1
            if len(busy_heap) < c:
                d = t + svc[svc_i]
                svc_i += 1
                wq_samples[i] = 0.0
                res_samples[i] = d - t
                heapq.heappush(busy_heap, d)
            else:
                queue.append((t, i))
        while busy_heap:  # drain so every accepted tuple gets its residence
            tc = heapq.heappop(busy_heap)
            integrate(tc)
            n_sys -= 1
            if qhead < len(queue):
                qa, qi = queue[qhead]
                qhead += 1
                wq_samples[qi] = tc - qa
                d = tc + svc[svc_i]
                svc_i += 1
                res_samples[qi] = d - qa
                heapq.heappush(busy_heap, d)
    else:
        # single server, batch service [a, b]
        queue: list = []  # (arrival_time, index) waiting
        in_service: list = []  # (arrival_time, index) of current batch
        dep_time = math.inf
        n_sys = 0
        svc_i = 0
        t_prev = 0.0

        def integrate(t):
            nonlocal t_prev
            area_sys.add(t_prev, t, n_sys)
            area_q.add(t_prev, t, len(queue))
            t_prev = t

        def start_batch(now):
            nonlocal dep_time, svc_i, queue
            size = min(b, len(queue))
            batch, queue = queue[:size], queue[size:]
            for qa, qi in batch:
                wq_samples[qi] = now - qa
            in_service.extend(batch)
            dep_time = now + svc[svc_i]
            svc_i += 1

        def complete(tc):
            nonlocal dep_time, n_sys
            integrate(tc)
            for qa, qi in in_service:
                res_samples[qi] = tc - qa
            n_sys -= len(in_service)
            in_service.clear()
            dep_time = math.inf
            if len(queue) >= a:
                start_batch(tc)

        for i in range(arrivals):
            t = at[i]
            while dep_time <= t:
                complete(dep_time)
            integrate(t)
            busy_obs[i] = dep_time < math.inf
            if N is not None and n_sys >= N:
                lost_obs[i] = True
                continue
            n_sys += 1
            queue.append((t, i))
            if dep_time == math.inf and len(queue) >= a:
                start_batch(t)
        while dep_time < math.inf:
            complete(dep_time)
        # whatever still waits at the end never formed a batch; leave NaN

    sel = slice(w0, arrivals)
    res = res_samples[sel]
    wqs = wq_samples[sel]
    res = res[~np.isnan(res)]
    wqs = wqs[~np.isnan(wqs)]
    Wm, Wc = _batched_mean_ci(res, n_batches)
    Wqm, Wqc = _batched_mean_ci(wqs, n_batches)
    return PerfIndicators(
        L=area_sys.mean(),
        Lq=area_q.mean(),
        W=Wm,
        Wq=Wqm,
        Pbusy=float(busy_obs[sel].mean()),
        Ploss=float(lost_obs[sel].mean()),
        ci={
            "L": _ci_half(area_sys.batch_means()),
            "Lq": _ci_half(area_q.batch_means()),
            "W": Wc,
            "Wq": Wqc,
        },
    )
