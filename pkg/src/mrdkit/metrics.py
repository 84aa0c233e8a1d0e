"""Named set distances with their options, as used by the CLI and clustering."""
from dataclasses import dataclass, field

import numpy as np

from mrdkit.baselines import Estimator, SinkhornConfig, mmd2, sinkhorn
from mrdkit.errors import InvalidInputError
from mrdkit.kernels import KernelSpec, kmrd
from mrdkit.mrd import MrdConfig, Variant, mrd

MRD_METRICS = {"mrd": Variant.HEURISTIC_EXACT, "mrd-t": Variant.TIGHTENED, "mrd-s": Variant.SIMPLIFIED}
KMRD_METRICS = {"kmrd": Variant.HEURISTIC_EXACT, "kmrd-t": Variant.TIGHTENED, "kmrd-s": Variant.SIMPLIFIED}
METRICS = (*MRD_METRICS, *KMRD_METRICS, "mmd", "sinkhorn")


@dataclass(frozen=True)
class MetricOptions:
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec.gaussian("auto"))
    lambda12: float | None = None
    lambda21: float | None = None
    w1: float = 0.5
    tol: float = 1e-6
    epsilon: float = 0.1

    def mrd_config(self, variant):
        return MrdConfig(variant=variant, w1=self.w1, w2=1.0 - self.w1,
                         lambda12=self.lambda12, lambda21=self.lambda21, tol=self.tol)


def evaluate(name, X1, X2, opts=None):
    """Distance ``name`` between two sets as a report dict with a ``distance`` key."""
    opts = opts or MetricOptions()
    if name in MRD_METRICS:
        return mrd(X1, X2, opts.mrd_config(MRD_METRICS[name])).to_dict()
    if name in KMRD_METRICS:
        return kmrd(X1, X2, opts.kernel, opts.mrd_config(KMRD_METRICS[name])).to_dict()
    if name == "mmd":
        value = mmd2(X1, X2, opts.kernel, Estimator.BIASED)
        return {"distance": float(np.sqrt(value)), "mmd2": value}
    if name == "sinkhorn":
        return {"distance": sinkhorn(X1, X2, SinkhornConfig(epsilon=opts.epsilon)),
                "epsilon": opts.epsilon}
    raise InvalidInputError(f"unknown metric {name!r}; choose from {', '.join(METRICS)}")


def make_metric(name, opts=None):
    """A ``(X1, X2) -> float`` callable with a ``tag`` attribute describing it."""
    if name not in METRICS:
        raise InvalidInputError(f"unknown metric {name!r}; choose from {', '.join(METRICS)}")
    opts = opts or MetricOptions()
    if name in MRD_METRICS or name in KMRD_METRICS:
        opts.mrd_config(Variant.HEURISTIC_EXACT)  # validate weights and tol up front

    def metric(X1, X2):
        return evaluate(name, X1, X2, opts)["distance"]

    metric.tag = f"{name} {opts}"
    return metric
