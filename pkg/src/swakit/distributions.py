"""Workload distributions: Erlang, hyper-Erlang mixtures, and phase-type laws.

These three families model the workload quantities the rest of the package
consumes: service composition degrees, instance response-time spans, and
inter-arrival processes.  Erlang and hyper-Erlang evaluation is done through
the regularized lower incomplete gamma function, which stays stable at large
phase counts where the textbook finite sum overflows.  Phase-type laws are
kept in (alpha, T) form with the exit-rate vector derived as ``-T @ 1``.

Generator matrices read from external sources are not trusted: they pass
through :func:`validate_generator`, which either rejects structural
violations (strict) or clamps them and reports every change (repair).
Repairs are logged, never silent.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc, gammaln, logsumexp

from .errors import DistributionError, GeneratorValidationError, NumericalError

log = logging.getLogger(__name__)

__all__ = [
    "ErlangDist",
    "ErlangBranch",
    "HyperErlangDist",
    "PhaseTypeDist",
    "PointMassDist",
    "FitResult",
    "validate_generator",
    "fit_hyper_erlang_em",
    "matexp",
    "ph_from_mean_scv",
    "dist_to_dict",
    "dist_from_dict",
    "save_dist",
    "load_dist",
]


def _check_x(x):
    """Coerce ``x`` to a float array, rejecting negative values."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DistributionError("distribution argument must be >= 0")
    return arr


def _as_given(arr, x):
    """Return ``arr`` as a scalar if ``x`` was scalar."""
    if np.isscalar(x) or getattr(x, "ndim", 1) == 0:
        return float(arr)
    return arr


@dataclass(frozen=True)
class ErlangDist:
    """Erlang law with rate ``rate`` and integer phase count ``phases``.

    The CDF is evaluated as the regularized lower incomplete gamma function
    P(phases, rate*x) rather than the literal finite exponential sum; the two
    agree wherever the sum is computable, and the gamma form does not
    overflow at phase counts in the hundreds.
    """

    rate: float
    phases: int

    def __post_init__(self):
        if not (self.rate > 0 and np.isfinite(self.rate)):
            raise DistributionError(f"rate must be positive, got {self.rate}")
        if int(self.phases) != self.phases or self.phases < 1:
            raise DistributionError(f"phases must be a positive integer, got {self.phases}")
        object.__setattr__(self, "phases", int(self.phases))

    def pdf(self, x):
        xa = _check_x(x)
        k, lam = self.phases, self.rate
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = k * math.log(lam) + (k - 1) * np.log(xa) - lam * xa - gammaln(k)
            out = np.where(xa > 0, np.exp(logp), lam if k == 1 else 0.0)
        return _as_given(out, x)

    def cdf(self, x):
        xa = _check_x(x)
        return _as_given(gammainc(self.phases, self.rate * xa), x)

    def mean(self):
        return self.phases / self.rate

    def var(self):
        return self.phases / self.rate**2

    def moment(self, order: int) -> float:
        """Raw moment E[X**order]: prod_{i=0}^{order-1} (phases + i) / rate**order."""
        k, lam = self.phases, self.rate
        out = 1.0
        for i in range(order):
            out *= (k + i) / lam
        return out

    def scv(self):
        return 1.0 / self.phases

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.gamma(shape=self.phases, scale=1.0 / self.rate, size=n)

    def as_phase_type(self) -> "PhaseTypeDist":
        """Express the law as a chain of ``phases`` identical exponential stages."""
        k, lam = self.phases, self.rate
        T = np.diag(np.full(k, -lam)) + np.diag(np.full(k - 1, lam), 1)
        alpha = np.zeros(k)
        alpha[0] = 1.0
        return PhaseTypeDist(alpha, T)


@dataclass(frozen=True)
class ErlangBranch:
    """One weighted Erlang component of a hyper-Erlang mixture."""

    weight: float
    rate: float
    phases: int


class HyperErlangDist:
    """Finite mixture of Erlang laws with weights summing to one."""

    def __init__(self, branches: Sequence[ErlangBranch]):
        if not branches:
            raise DistributionError("hyper-Erlang needs at least one branch")
        self.branches = tuple(
            b if isinstance(b, ErlangBranch) else ErlangBranch(*b) for b in branches
        )
        w = np.array([b.weight for b in self.branches])
        if np.any(w < 0):
            raise DistributionError("branch weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise DistributionError(f"branch weights must sum to 1, got {w.sum()!r}")
        # constructing the components also validates rates/phase counts
        self._components = tuple(ErlangDist(b.rate, b.phases) for b in self.branches)
        self._weights = w

    def __repr__(self):
        parts = ", ".join(
            f"({b.weight:g}, rate={b.rate:g}, k={b.phases})" for b in self.branches
        )
        return f"HyperErlangDist([{parts}])"

    def pdf(self, x):
        xa = _check_x(x)
        out = sum(w * c.pdf(xa) for w, c in zip(self._weights, self._components))
        return _as_given(out, x)

    def cdf(self, x):
        xa = _check_x(x)
        out = sum(w * c.cdf(xa) for w, c in zip(self._weights, self._components))
        return _as_given(out, x)

    def mean(self):
        return float(sum(w * c.mean() for w, c in zip(self._weights, self._components)))

    def moment(self, order: int) -> float:
        return float(
            sum(w * c.moment(order) for w, c in zip(self._weights, self._components))
        )

    def var(self):
        return self.moment(2) - self.mean() ** 2

    def scv(self):
        m = self.mean()
        return self.var() / m**2

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.choice(len(self.branches), size=n, p=self._weights)
        out = np.empty(n)
        for j, comp in enumerate(self._components):
            mask = idx == j
            cnt = int(mask.sum())
            if cnt:
                out[mask] = comp.sample(cnt, rng)
        return out

    def as_phase_type(self) -> "PhaseTypeDist":
        """Block-diagonal phase-type form, one Erlang chain per branch."""
        total = sum(b.phases for b in self.branches)
        T = np.zeros((total, total))
        alpha = np.zeros(total)
        pos = 0
        for b in self.branches:
            blk = b.phases
            T[pos : pos + blk, pos : pos + blk] = b.rate * (
                np.diag(np.full(blk - 1, 1.0), 1) - np.eye(blk)
            )
            alpha[pos] = b.weight
            pos += blk
        return PhaseTypeDist(alpha, T)


class PhaseTypeDist:
    """Phase-type law given by an initial vector and sub-generator matrix.

    The exit-rate vector is always derived as ``-T @ 1``.  Construction only
    checks shapes and finiteness; structural validity (sign pattern, row
    sums) is the business of :func:`validate_generator`, so that generators
    transcribed from external sources can be loaded first and repaired
    afterwards.
    """

    def __init__(self, alpha, T):
        self.alpha = np.asarray(alpha, dtype=float).ravel()
        self.T = np.asarray(T, dtype=float)
        if self.T.ndim != 2 or self.T.shape[0] != self.T.shape[1]:
            raise DistributionError(f"T must be square, got shape {self.T.shape}")
        if self.alpha.shape[0] != self.T.shape[0]:
            raise DistributionError(
                f"alpha length {self.alpha.shape[0]} does not match T order {self.T.shape[0]}"
            )
        if not (np.all(np.isfinite(self.alpha)) and np.all(np.isfinite(self.T))):
            raise DistributionError("alpha and T must be finite")

    @property
    def order(self) -> int:
        return self.T.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        return -self.T @ np.ones(self.order)

    def __repr__(self):
        return f"PhaseTypeDist(order={self.order})"

    def generator_violations(self) -> list:
        """List structural problems with (alpha, T), empty when valid."""
        probs = []
        m = self.order
        for i in range(m):
            if self.T[i, i] >= 0:
                probs.append(f"diagonal ({i},{i}) = {self.T[i, i]:g} must be negative")
            for j in range(m):
                if i != j and self.T[i, j] < 0:
                    probs.append(
                        f"off-diagonal ({i},{j}) = {self.T[i, j]:g} must be non-negative"
                    )
        rows = self.T.sum(axis=1)
        for i in range(m):
            if rows[i] > 1e-9:
                probs.append(f"row {i} sums to {rows[i]:g} > 0 (negative exit rate)")
        if np.any(self.alpha < -1e-12):
            probs.append("alpha has negative entries")
        if self.alpha.sum() > 1 + 1e-9:
            probs.append(f"alpha sums to {self.alpha.sum():g} > 1")
        return probs

    def is_valid_generator(self) -> bool:
        return not self.generator_violations()

    def _require_valid(self, what):
        probs = self.generator_violations()
        if probs:
            raise GeneratorValidationError(
                [f"cannot {what} on invalid generator"] + probs
            )

    def cdf(self, x):
        xa = _check_x(x)
        one = np.ones(self.order)
        flat = np.atleast_1d(xa)
        out = np.array([1.0 - self.alpha @ expm(self.T * v) @ one for v in flat])
        out = out.reshape(np.shape(xa))
        return _as_given(out, x)

    def pdf(self, x):
        xa = _check_x(x)
        t0 = self.exit_rates
        flat = np.atleast_1d(xa)
        out = np.array([self.alpha @ expm(self.T * v) @ t0 for v in flat])
        out = out.reshape(np.shape(xa))
        return _as_given(out, x)

    def moment(self, order: int) -> float:
        """Raw moment (-1)**order * order! * alpha @ T**-order @ 1.

        A singular T is surfaced as a numerical error rather than masked.
        """
        vec = np.ones(self.order)
        try:
            for _ in range(order):
                vec = np.linalg.solve(self.T, vec)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"T is singular, cannot compute moments: {exc}") from exc
        return float((-1) ** order * math.factorial(order) * (self.alpha @ vec))

    def mean(self):
        # point mass at zero carried by 1 - sum(alpha) contributes nothing
        return self.moment(1)

    def var(self):
        return self.moment(2) - self.mean() ** 2

    def scv(self):
        m = self.mean()
        return self.var() / m**2

    def scaled_to_mean(self, target_mean: float) -> "PhaseTypeDist":
        """Return a copy with T scaled so that the mean equals ``target_mean``."""
        if target_mean <= 0:
            raise DistributionError("target mean must be positive")
        return PhaseTypeDist(self.alpha, self.T * (self.mean() / target_mean))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` absorption times by simulating the phase process in bulk."""
        self._require_valid("sample")
        m = self.order
        # jump-chain: row s -> phases 0..m-1 then absorption in column m
        diag = -np.diag(self.T)
        jump = np.zeros((m, m + 1))
        for s in range(m):
            if diag[s] <= 0:
                raise DistributionError(f"phase {s} has zero exit rate, cannot sample")
            jump[s, :m] = self.T[s] / diag[s]
            jump[s, s] = 0.0
            jump[s, m] = self.exit_rates[s] / diag[s]
        cum = np.cumsum(jump, axis=1)
        cum[:, -1] = 1.0

        a_sum = self.alpha.sum()
        probs = np.append(np.clip(self.alpha, 0, None), max(0.0, 1.0 - a_sum))
        probs = probs / probs.sum()
        state = rng.choice(m + 1, size=n, p=probs)
        times = np.zeros(n)
        alive = state < m
        while np.any(alive):
            idx = np.nonzero(alive)[0]
            s = state[idx]
            times[idx] += rng.exponential(1.0, idx.size) / diag[s]
            u = rng.random(idx.size)
            nxt = (u[:, None] >= cum[s]).sum(axis=1)
            state[idx] = nxt
            alive[idx] = nxt < m
        return times


@dataclass(frozen=True)
class PointMassDist:
    """Degenerate law concentrated at a single value (useful in tests/configs)."""

    value: float

    def __post_init__(self):
        if not (self.value >= 0 and np.isfinite(self.value)):
            raise DistributionError(f"point mass must sit at a finite x >= 0, got {self.value}")

    def pdf(self, x):  # density does not exist; kept for interface symmetry
        xa = _check_x(x)
        return _as_given(np.where(xa == self.value, np.inf, 0.0), x)

    def cdf(self, x):
        xa = _check_x(x)
        return _as_given((xa >= self.value).astype(float), x)

    def mean(self):
        return self.value

    def var(self):
        return 0.0

    def moment(self, order):
        return self.value**order

    def scv(self):
        return 0.0

    def sample(self, n, rng):
        return np.full(n, float(self.value))


def matexp(T, x: float) -> np.ndarray:
    """Matrix exponential expm(T * x) via scaling-and-squaring with Pade."""
    arr = np.asarray(T, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DistributionError("matexp needs a square matrix")
    return expm(arr * float(x))


def validate_generator(dist: PhaseTypeDist, policy: str = "strict"):
    """Check or repair the structural constraints of a phase-type generator.

    Args:
        dist: candidate distribution, possibly transcribed with errors.
        policy: ``"strict"`` raises on any violation; ``"repair"`` clamps
            negative off-diagonals to zero, rebalances diagonals so no row
            produces a negative exit rate, renormalizes alpha, and reports
            each change.

    Returns:
        Tuple ``(dist, repairs)`` where ``repairs`` is a list of
        human-readable descriptions (empty when nothing was wrong).
    """
    if policy not in ("strict", "repair"):
        raise DistributionError(f"unknown validation policy {policy!r}")
    violations = dist.generator_violations()
    if not violations:
        return dist, []
    if policy == "strict":
        raise GeneratorValidationError(violations)

    T = dist.T.copy()
    alpha = dist.alpha.copy()
    repairs = []
    m = T.shape[0]
    for i in range(m):
        for j in range(m):
            if i != j and T[i, j] < 0:
                repairs.append(f"off-diagonal ({i},{j}) = {T[i, j]:g} clamped to 0")
                T[i, j] = 0.0
    for i in range(m):
        off = T[i].sum() - T[i, i]
        if T[i, i] >= 0:
            new = -off if off > 0 else -1.0
            repairs.append(f"diagonal ({i},{i}) = {T[i, i]:g} reset to {new:g}")
            T[i, i] = new
        elif T[i].sum() > 1e-12:
            repairs.append(
                f"diagonal ({i},{i}) = {T[i, i]:g} rebalanced to {-off:g} "
                "so the exit rate is non-negative"
            )
            T[i, i] = -off
    if np.any(alpha < 0):
        repairs.append("negative alpha entries clamped to 0")
        alpha = np.clip(alpha, 0, None)
    s = alpha.sum()
    if s > 1 + 1e-9:
        repairs.append(f"alpha renormalized from sum {s:g} to 1")
        alpha = alpha / s
    for msg in repairs:
        log.warning("generator repair: %s", msg)
    repaired = PhaseTypeDist(alpha, T)
    leftover = repaired.generator_violations()
    if leftover:  # pragma: no cover - repair should always converge
        raise GeneratorValidationError(leftover)
    return repaired, repairs


def ph_from_mean_scv(mean: float, scv: float) -> PhaseTypeDist:
    """Two-moment phase-type fit: hyperexponential above SCV 1, Erlang mixture below.

    For scv <= 1 this uses the classic mixture of Erlang(k) and Erlang(k+1)
    with a common rate, which matches mean and SCV exactly whenever
    1/(k+1) <= scv.  For scv > 1 it uses the balanced-means two-phase
    hyperexponential.
    """
    if mean <= 0:
        raise DistributionError("mean must be positive")
    if scv <= 0:
        raise DistributionError("scv must be positive (use a point mass for zero variance)")
    if abs(scv - 1.0) < 1e-12:
        return PhaseTypeDist([1.0], [[-1.0 / mean]])
    if scv > 1.0:
        p = 0.5 * (1.0 + math.sqrt((scv - 1.0) / (scv + 1.0)))
        l1 = 2.0 * p / mean
        l2 = 2.0 * (1.0 - p) / mean
        return PhaseTypeDist([p, 1.0 - p], [[-l1, 0.0], [0.0, -l2]])
    k = int(math.floor(1.0 / scv))
    # guard against floating point putting us just outside [1/(k+1), 1/k]
    if 1.0 / k < scv:
        k -= 1
    kk = k + 1  # order of the larger branch; the weight formula is stated in it
    p = (kk * scv - math.sqrt(kk * (1.0 + scv) - kk * kk * scv)) / (1.0 + scv)
    lam = (kk - p) / mean
    mix = []
    if p > 1e-14:
        mix.append(ErlangBranch(p, lam, k))
    if 1.0 - p > 1e-14:
        mix.append(ErlangBranch(1.0 - p, lam, k + 1))
    if len(mix) == 1:
        mix = [ErlangBranch(1.0, lam, mix[0].phases)]
    return HyperErlangDist(mix).as_phase_type()


# ---------------------------------------------------------------------------
# hyper-Erlang fitting
# ---------------------------------------------------------------------------


@dataclass
class FitResult:
    """Outcome of an EM fit: the distribution plus convergence diagnostics."""

    dist: object
    log_likelihood: float
    ll_trace: list
    iterations: int
    converged: bool
    degenerate: bool = False


def _erlang_logpdf(x, rate, k):
    return k * np.log(rate) + (k - 1) * np.log(x) - rate * x - gammaln(k)


def _em_fixed_phases(x, ks, weights, rates, tol, max_iter):
    """EM updates for a hyper-Erlang with a fixed phase-count vector."""
    n = x.shape[0]
    w = np.array(weights, float)
    r = np.array(rates, float)
    trace = []
    prev = -np.inf
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        logd = np.log(w)[None, :] + np.stack(
            [_erlang_logpdf(x, r[j], ks[j]) for j in range(len(ks))], axis=1
        )
        norm = logsumexp(logd, axis=1)
        ll = float(norm.sum())
        trace.append(ll)
        resp = np.exp(logd - norm[:, None])
        tot = resp.sum(axis=0)
        tot = np.maximum(tot, 1e-300)
        w = tot / n
        r = np.array(
            [ks[j] * tot[j] / max(resp[:, j] @ x, 1e-300) for j in range(len(ks))]
        )
        if prev > -np.inf and abs(ll - prev) <= tol * max(abs(prev), 1.0):
            converged = True
            break
        prev = ll
    return w, r, trace, it, converged


def _kmeans_log(x, n_clusters, iters=60):
    """Deterministic 1-d k-means on log values, centers seeded at quantiles."""
    lx = np.log(x)
    qs = np.linspace(0, 1, n_clusters + 2)[1:-1]
    centers = np.quantile(lx, qs)
    centers = np.unique(centers)
    while centers.size < n_clusters:  # identical quantiles: nudge apart
        centers = np.append(centers, centers[-1] + 1e-6 * (centers.size + 1))
    labels = np.zeros(lx.shape[0], dtype=int)
    for _ in range(iters):
        d = np.abs(lx[:, None] - centers[None, :])
        new_labels = d.argmin(axis=1)
        if np.array_equal(new_labels, labels) and _ > 0:
            break
        labels = new_labels
        for c in range(n_clusters):
            sel = lx[labels == c]
            if sel.size:
                centers[c] = sel.mean()
    return labels


def fit_hyper_erlang_em(
    samples,
    branches: int = 2,
    max_phases: int = 10,
    tol: float = 1e-7,
    max_iter: int = 2000,
) -> FitResult:
    """Fit a hyper-Erlang law to positive samples by expectation-maximization.

    Branch rates and weights are optimized by EM at a fixed phase-count
    vector; the integer phase counts themselves are chosen by an exhaustive
    scan when ``branches == 1`` and otherwise by +-1 hill climbing from a
    k-means-on-log-values initialization.  The log-likelihood of the
    returned fit is nondecreasing across the reported EM iterations.

    An all-identical sample cannot be fit meaningfully; it yields the most
    peaked Erlang available (``max_phases`` stages at the sample mean) with
    ``degenerate=True``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if branches < 1:
        raise DistributionError("branches must be >= 1")
    if x.size < 10 * branches:
        raise DistributionError(
            f"need at least {10 * branches} samples for {branches} branches, got {x.size}"
        )
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise DistributionError("samples must be positive and finite")
    if max_phases < 1:
        raise DistributionError("max_phases must be >= 1")

    mean = float(x.mean())
    if np.ptp(x) == 0 or x.std() / mean < 1e-12:
        dist = ErlangDist(max_phases / mean, max_phases)
        ll = float(np.sum(_erlang_logpdf(x, dist.rate, dist.phases)))
        log.warning("degenerate sample (zero spread): returning near-point-mass fit")
        return FitResult(dist, ll, [ll], 0, True, degenerate=True)

    if branches == 1:
        best = None
        for k in range(1, max_phases + 1):
            rate = k / mean  # closed-form MLE of the rate at fixed k
            ll = float(np.sum(_erlang_logpdf(x, rate, k)))
            if best is None or ll > best[0]:
                best = (ll, k, rate)
        ll, k, rate = best
        return FitResult(ErlangDist(rate, k), ll, [ll], 1, True)

    labels = _kmeans_log(x, branches)
    ks, weights, rates = [], [], []
    for c in range(branches):
        sel = x[labels == c]
        if sel.size == 0:
            sel = x
        m = sel.mean()
        v = sel.var()
        k0 = 1 if v <= 0 else int(np.clip(round(m * m / v), 1, max_phases))
        ks.append(k0)
        weights.append(max(sel.size, 1) / x.size)
        rates.append(k0 / m)
    weights = list(np.array(weights) / np.sum(weights))

    def run(ks_vec, w0, r0):
        return _em_fixed_phases(x, ks_vec, w0, r0, tol, max_iter)

    w, r, trace, iters, conv = run(ks, weights, rates)
    best = (trace[-1], tuple(ks), w, r, trace, iters, conv)
    budget = 60  # candidate structure evaluations
    improved = True
    while improved and budget > 0:
        improved = False
        for j in range(branches):
            for delta in (1, -1):
                cand = list(best[1])
                cand[j] += delta
                if not (1 <= cand[j] <= max_phases):
                    continue
                budget -= 1
                # rescale the mutated branch rate so its mean is preserved
                r_init = np.array(best[3], float)
                r_init[j] = r_init[j] * cand[j] / best[1][j]
                w2, r2, tr2, it2, cv2 = run(cand, best[2], r_init)
                if tr2[-1] > best[0] + 1e-9:
                    best = (tr2[-1], tuple(cand), w2, r2, tr2, it2, cv2)
                    improved = True
        if budget <= 0:
            break

    ll, ks_fin, w, r, trace, iters, conv = best
    order = np.argsort([k / rate for k, rate in zip(ks_fin, r)])  # by branch mean
    branches_out = [ErlangBranch(float(w[i]), float(r[i]), int(ks_fin[i])) for i in order]
    total = sum(b.weight for b in branches_out)
    branches_out = [ErlangBranch(b.weight / total, b.rate, b.phases) for b in branches_out]
    return FitResult(HyperErlangDist(branches_out), ll, trace, iters, conv)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def dist_to_dict(dist) -> dict:
    """Serialize a distribution to its JSON document form."""
    if isinstance(dist, ErlangDist):
        return {"type": "erlang", "lambda": dist.rate, "k": dist.phases}
    if isinstance(dist, HyperErlangDist):
        return {
            "type": "hyper_erlang",
            "branches": [
                {"alpha": b.weight, "lambda": b.rate, "k": b.phases} for b in dist.branches
            ],
        }
    if isinstance(dist, PhaseTypeDist):
        return {"type": "ph", "alpha": dist.alpha.tolist(), "T": dist.T.tolist()}
    if isinstance(dist, PointMassDist):
        return {"type": "point", "value": dist.value}
    raise DistributionError(f"cannot serialize {type(dist).__name__}")


def dist_from_dict(doc: dict):
    """Inverse of :func:`dist_to_dict`; raises on unknown or malformed docs."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise DistributionError("distribution document must be an object with a 'type'")
    kind = doc["type"]
    try:
        if kind == "erlang":
            return ErlangDist(float(doc["lambda"]), int(doc["k"]))
        if kind == "hyper_erlang":
            return HyperErlangDist(
                [
                    ErlangBranch(float(b["alpha"]), float(b["lambda"]), int(b["k"]))
                    for b in doc["branches"]
                ]
            )
        if kind == "ph":
            return PhaseTypeDist(doc["alpha"], doc["T"])
        if kind == "point":
            return PointMassDist(float(doc["value"]))
    except KeyError as exc:
        raise DistributionError(f"distribution document missing field {exc}") from exc
    raise DistributionError(f"unknown distribution type {kind!r}")


def save_dist(dist, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dist_to_dict(dist), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dist(path):
    with open(path, "r", encoding="utf-8") as fh:
        return dist_from_dict(json.load(fh))
