"""Perturbation bounds for MRD and kernel MRD, and Monte-Carlo checks of them.

Each trial adds i.i.d. ``N(0, sigma^2)`` noise to both sets and records the
change in distance. Trial ``k`` draws from its own stream derived from
``(seed, k)``, so results do not depend on how trials are scheduled.

The bounds hold for the exact constrained distance. The computed distance is
the ridge-path heuristic, which can sit above the exact value. A trial
therefore counts as a violation only when its change exceeds the bound plus
the measured heuristic gap (heuristic minus projected-gradient value) of the
clean and perturbed pairs. Raw exceedances are reported separately.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from mrdkit.data import make_rng
from mrdkit.ddsc import default_jobs
from mrdkit.errors import InvalidInputError
from mrdkit.kernels import KernelFamily, kmrd_heuristic, kmrd_oracle, pairwise_sq_dists
from mrdkit.linalg import as_sample_matrix, check_same_dim
from mrdkit.mrd import MrdConfig, mrd_heuristic, mrd_oracle


def xi(m, n1, n2, t):
    """``sqrt(m n + 2 sqrt(m n t) + 2 t)`` with ``n = max(n1, n2)``."""
    if min(m, n1, n2) < 1 or t < 0:
        raise InvalidInputError("xi needs m, n1, n2 >= 1 and t >= 0")
    mn = m * max(n1, n2)
    return math.sqrt(mn + 2.0 * math.sqrt(mn * t) + 2.0 * t)


def epsilon_kernel(Dinf, r, m, t, sigma):
    """Entrywise Gaussian-kernel perturbation bound for bandwidth ``r``.

    ``((sigma xi_m + Dinf / sqrt 2)^2 - Dinf^2 / 2) / r^2`` with
    ``xi_m = sqrt(m + 2 sqrt(m t) + 2 t)``.
    """
    if not r > 0:
        raise InvalidInputError(f"bandwidth must be > 0, got {r}")
    if Dinf < 0 or sigma < 0 or t < 0 or m < 1:
        raise InvalidInputError("epsilon_kernel needs Dinf, sigma, t >= 0 and m >= 1")
    xi_m = math.sqrt(m + 2.0 * math.sqrt(m * t) + 2.0 * t)
    a = sigma * xi_m
    # expanded form avoids cancellation: (a + b)^2 - b^2 = a (a + 2b)
    return a * (a + 2.0 * Dinf / math.sqrt(2.0)) / (r * r)


def psi(n1, n2, w1, w2, eps):
    """Kernel MRD perturbation bound ``2 sqrt((w1 + w2) eps n1 n2)``."""
    if eps < 0:
        raise InvalidInputError(f"eps must be >= 0, got {eps}")
    return 2.0 * math.sqrt((w1 + w2) * eps * n1 * n2)


@dataclass
class RobustnessReport:
    trials: int
    sigma: float
    t: float
    bound: float
    deltas: list
    violations: int
    raw_violations: int
    slack: list
    allowed_rate: float
    clean_distance: float
    parameters: dict = field(default_factory=dict)

    @property
    def violation_rate(self):
        return self.violations / self.trials

    @property
    def vacuous(self):
        return self.allowed_rate >= 1.0

    @property
    def within_rate(self):
        return self.violation_rate <= self.allowed_rate

    def to_dict(self):
        return {
            "trials": self.trials,
            "sigma": self.sigma,
            "t": self.t,
            "bound": self.bound,
            "deltas": list(self.deltas),
            "slack": list(self.slack),
            "violations": self.violations,
            "raw_violations": self.raw_violations,
            "violation_rate": self.violation_rate,
            "allowed_rate": self.allowed_rate,
            "vacuous": self.vacuous,
            "within_rate": self.within_rate,
            "clean_distance": self.clean_distance,
            "parameters": self.parameters,
        }


def _run_trials(X1, X2, sigma, trials, seed, distance, gap, jobs):
    """Per-trial ``(delta, slack)`` pairs and the clean distance."""
    clean = distance(X1, X2)
    clean_gap = gap(X1, X2, clean) if sigma > 0 else 0.0

    def one(k):
        if sigma == 0:
            return 0.0, 0.0
        rng = make_rng(seed, k)
        P1 = X1 + sigma * rng.standard_normal(X1.shape)
        P2 = X2 + sigma * rng.standard_normal(X2.shape)
        d = distance(P1, P2)
        return abs(d - clean), max(clean_gap, gap(P1, P2, d))

    workers = jobs or default_jobs()
    if workers > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, range(trials)))
    else:
        out = [one(k) for k in range(trials)]
    return clean, [d for d, _ in out], [s for _, s in out]


def _report(clean, deltas, slack, bound, allowed, sigma, t, parameters):
    raw = sum(d > bound for d in deltas)
    viol = sum(d > bound + s for d, s in zip(deltas, slack))
    return RobustnessReport(
        trials=len(deltas),
        sigma=float(sigma),
        t=float(t),
        bound=float(bound),
        deltas=[float(d) for d in deltas],
        violations=int(viol),
        raw_violations=int(raw),
        slack=[float(s) for s in slack],
        allowed_rate=float(min(1.0, max(0.0, allowed))),
        clean_distance=float(clean),
        parameters=parameters,
    )


def _check_trials(sigma, t, trials):
    if int(trials) < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if sigma < 0 or t < 0:
        raise InvalidInputError("sigma and t must be >= 0")


def check_linear_bound(X1, X2, sigma, t, trials=200, seed=0, cfg=None, measure_gap=True, jobs=None):
    """Monte-Carlo check of the linear MRD perturbation bound.

    The bound is ``2 sigma xi(m, n1, n2, t) sqrt(w1 + w2)`` and may fail with
    probability at most ``exp(-t)``.
    """
    _check_trials(sigma, t, trials)
    cfg = cfg or MrdConfig()
    X1 = as_sample_matrix(X1, "X1")
    X2 = as_sample_matrix(X2, "X2")
    check_same_dim(X1, X2)
    m, n1, n2 = X1.shape[0], X1.shape[1], X2.shape[1]

    def distance(A, B):
        return mrd_heuristic(A, B, cfg).distance

    def gap(A, B, d):
        if not measure_gap:
            return 0.0
        return max(0.0, d - mrd_oracle(A, B, cfg.w1, cfg.w2, tol=1e-8))

    x = xi(m, n1, n2, t)
    bound = 2.0 * sigma * x * math.sqrt(cfg.w1 + cfg.w2)
    clean, deltas, slack = _run_trials(X1, X2, sigma, int(trials), seed, distance, gap, jobs)
    params = {"m": m, "n1": n1, "n2": n2, "xi": x, "w1": cfg.w1, "w2": cfg.w2, "seed": seed}
    return _report(clean, deltas, slack, bound, math.exp(-t), sigma, t, params)


def check_kernel_bound(X1, X2, kernel, sigma, t, trials=100, seed=0, cfg=None, measure_gap=True, jobs=None):
    """Monte-Carlo check of the Gaussian kernel MRD perturbation bound.

    The bound is ``psi(n1, n2, w1, w2, eps)`` with ``eps`` the largest of the
    four block bounds from :func:`epsilon_kernel`, using the largest clean
    pairwise distance of each block. The allowed failure rate
    ``(n1 + n2)^2 exp(-t)`` is clamped to 1, at which point the check is
    vacuous and the report says so.
    """
    _check_trials(sigma, t, trials)
    if kernel.family is not KernelFamily.GAUSSIAN:
        raise InvalidInputError("the kernel bound holds for the Gaussian kernel only")
    if kernel.adaptive:
        raise InvalidInputError("the kernel bound needs a fixed bandwidth, not 'auto'")
    cfg = cfg or MrdConfig()
    X1 = as_sample_matrix(X1, "X1")
    X2 = as_sample_matrix(X2, "X2")
    check_same_dim(X1, X2)
    m, n1, n2 = X1.shape[0], X1.shape[1], X2.shape[1]
    r = float(kernel.bandwidth)

    blocks = {"11": (X1, X1), "12": (X1, X2), "21": (X2, X1), "22": (X2, X2)}
    dinf = {k: float(np.sqrt(np.max(pairwise_sq_dists(A, B)))) for k, (A, B) in blocks.items()}
    eps_ij = {k: epsilon_kernel(v, r, m, t, sigma) for k, v in dinf.items()}
    eps = max(eps_ij.values())
    bound = psi(n1, n2, cfg.w1, cfg.w2, eps)

    def distance(A, B):
        return kmrd_heuristic(A, B, kernel, cfg).distance

    def gap(A, B, d):
        if not measure_gap:
            return 0.0
        return max(0.0, d - kmrd_oracle(A, B, kernel, cfg.w1, cfg.w2, tol=1e-8))

    clean, deltas, slack = _run_trials(X1, X2, sigma, int(trials), seed, distance, gap, jobs)
    params = {"m": m, "n1": n1, "n2": n2, "bandwidth": r, "dinf": dinf, "epsilon_blocks": eps_ij,
              "epsilon": eps, "w1": cfg.w1, "w2": cfg.w2, "seed": seed}
    return _report(clean, deltas, slack, bound, (n1 + n2) ** 2 * math.exp(-t), sigma, t, params)
