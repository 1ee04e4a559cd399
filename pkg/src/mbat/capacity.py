"""Capacity of bundled +/-1 vectors: closed-form estimates and Monte Carlo.

Notation: ``D`` dimension, ``S`` vectors bundled into ``V``, ``N`` extra
random vectors, ``T(x)`` the one-sided standard normal tail.  A bundled
vector A and a random vector R are confused when ``R.V > A.V``; the
difference of the two scores is approximately ``Normal(D, (2S-1)D)``, so the
pairwise error is ``T(Z)`` with ``Z = sqrt(D / (2S - 1))``.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import rng
from .errors import InvalidArgument, SolverLimit

MAX_DIMENSION = 1 << 32

CSV_COLUMNS = ["D", "S", "N", "trials", "fracBundledInTopS", "fracErrorFreeTrials", "linearizedP", "exactP", "seed"]


@dataclass(frozen=True)
class CapacityParams:
    D: int
    S: int
    N: int
    q: float = 0.01

    def __post_init__(self):
        if self.D < 1 or self.S < 1 or self.N < 1:
            raise InvalidArgument("D, S and N must all be >= 1")
        if not 0 < self.q < 1:
            raise InvalidArgument("q must lie in (0, 1)")


@dataclass(frozen=True)
class CapacityReport:
    Z: float
    pairError: float
    errorFreeLinearized: float
    errorFreeExact: float
    requiredD: int | None
    plateBound: float
    plateFloor: float


@dataclass(frozen=True)
class SimulationResult:
    trials: int
    fracBundledInTopS: float
    fracErrorFreeTrials: float
    seed: int
    params: CapacityParams | None = None


def tail_prob(x: float) -> float:
    """P[Normal(0, 1) >= x]."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def z_value(D: float, S: int) -> float:
    return math.sqrt(D / (2 * S - 1))


def pair_error(D: float, S: int) -> float:
    return tail_prob(z_value(D, S))


def error_free_prob(D: float, S: int, N: int) -> tuple[float, float]:
    """(linearized, exact) probability that all S bundled beat all N random.

    exact = (1 - T(Z))^(N S) treats the N S comparisons as independent;
    linearized = 1 - N S T(Z) drops the higher-order terms and is only
    trustworthy when it is close to 1 (above about 0.9).
    """
    t = pair_error(D, S)
    ns = N * S
    linearized = max(0.0, 1.0 - ns * t)
    exact = math.exp(ns * math.log1p(-t)) if t < 1 else 0.0
    return linearized, exact


def required_dimension(S: int, N: int, p_target: float) -> int:
    """Smallest integer D whose linearized error-free probability reaches ``p_target``."""
    if not 0 < p_target < 1:
        raise InvalidArgument("p_target must lie in (0, 1)")
    if S < 1 or N < 1:
        raise InvalidArgument("S and N must be >= 1")

    def ok(d):
        return error_free_prob(d, S, N)[0] >= p_target

    hi = 1
    while not ok(hi):
        if hi >= MAX_DIMENSION:
            raise SolverLimit(f"no D <= 2^32 reaches p = {p_target} for S={S}, N={N}")
        hi = min(hi * 2, MAX_DIMENSION)
    lo = hi // 2  # ok(lo) is False unless hi == 1
    if hi == 1:
        return 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def plate_bound(S: int, N: int, q: float) -> tuple[float, float]:
    """Plate's sufficient dimension for normal components, and its validity floor."""
    if not 0 < q < 1:
        raise InvalidArgument("q must lie in (0, 1)")
    return 8 * (S + 1) * math.log(N / q), 2 * (S + 1) / math.pi


def analyze(params: CapacityParams, p_target: float | None = None) -> CapacityReport:
    """All closed-form quantities for one (D, S, N, q) cell.

    ``requiredD`` is solved for ``p_target`` (default ``1 - q``) and is
    ``None`` when the solver gives up.
    """
    D, S, N = params.D, params.S, params.N
    lin, exact = error_free_prob(D, S, N)
    try:
        req = required_dimension(S, N, 1 - params.q if p_target is None else p_target)
    except SolverLimit:
        req = None
    bound, floor = plate_bound(S, N, params.q)
    return CapacityReport(z_value(D, S), pair_error(D, S), lin, exact, req, bound, floor)


def recognition_moments(D: int, S: int) -> dict[str, float]:
    """Mean and variance of member / non-member dots with a bundle of S bipolar vectors."""
    return {"member_mean": D, "member_var": (S - 1) * D, "nonmember_mean": 0.0, "nonmember_var": S * D}


def bound_recognition_moments(matrix: np.ndarray, S: int) -> dict[str, float]:
    """Moments of ``(Mx).(M(x + y2 + ... + yS))`` over random bipolar x, y, w.

    Conditioned on the matrix M, with Gram matrix G = M^T M:
    member score = x'Gx + sum_k x'G y_k has mean trace(G) and variance
    2*offdiag(G) + (S-1)*|G|_F^2; a fresh w scores with mean 0 and variance
    S*|G|_F^2.  With M = I this reduces to ``recognition_moments``.
    """
    m = np.asarray(matrix, dtype=np.float64)
    g = m.T @ m
    fro2 = float(np.sum(g * g))
    diag2 = float(np.sum(np.diag(g) ** 2))
    return {
        "member_mean": float(np.trace(g)),
        "member_var": 2 * (fro2 - diag2) + (S - 1) * fro2,
        "nonmember_mean": 0.0,
        "nonmember_var": S * fro2,
    }


# -- simulation ------------------------------------------------------------


def _trial(D: int, S: int, N: int, seed: int, index: int) -> tuple[int, bool]:
    """(# bundled vectors among the top S, error-free?) for one trial."""
    total = S + N
    wpr = (D + 63) // 64
    words = rng.raw_words(rng.mix(seed, index), ("capacity",), total * wpr).reshape(total, wpr)
    # float32 is exact here: every partial sum is an integer below S*D < 2^24
    dtype = np.float32 if S * D < (1 << 24) else np.float64
    vecs = rng.words_to_signs(words, D, dtype=dtype)
    v = vecs[:S].sum(axis=0)
    dots = vecs @ v
    order = np.argsort(-dots, kind="stable")
    in_top = int(np.count_nonzero(order[:S] < S))
    error_free = bool(dots[:S].min() > dots[S:].max())
    return in_top, error_free


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("MBAT_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def simulate_capacity(params: CapacityParams, trials: int, master_seed: int, workers: int | None = None) -> SimulationResult:
    """Monte Carlo estimate of top-S recall and error-free separation.

    Trial i draws S + N fresh vectors from ``mix(master_seed, i)``; the first
    S are bundled.  Per-trial counts are integers, so the aggregate is the
    same for any number of workers.
    """
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    D, S, N = params.D, params.S, params.N
    n = _workers(workers)
    if n == 1:
        results = [_trial(D, S, N, master_seed, i) for i in range(trials)]
    else:
        with ThreadPoolExecutor(n) as pool:
            results = list(pool.map(lambda i: _trial(D, S, N, master_seed, i), range(trials)))
    in_top = sum(r[0] for r in results)
    error_free = sum(r[1] for r in results)
    return SimulationResult(trials, in_top / (S * trials), error_free / trials, master_seed, params)


def simulation_row(result: SimulationResult) -> dict:
    p = result.params
    lin, exact = error_free_prob(p.D, p.S, p.N)
    return {
        "D": p.D,
        "S": p.S,
        "N": p.N,
        "trials": result.trials,
        "fracBundledInTopS": result.fracBundledInTopS,
        "fracErrorFreeTrials": result.fracErrorFreeTrials,
        "linearizedP": lin,
        "exactP": exact,
        "seed": result.seed,
    }


def write_csv(rows, columns=CSV_COLUMNS, stream=None, header_lines=()) -> str:
    """Render rows as CSV (floats with repr precision); optional ``#`` header lines."""
    buf = stream if stream is not None else io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue() if stream is None else ""


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def report_dict(report: CapacityReport) -> dict:
    return asdict(report)
