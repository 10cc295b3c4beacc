"""Seeded synthetic datasets for the reproduction experiments.

All families draw from ``numpy.random.Generator(PCG64(seed))``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..data import Dataset

RNG_ALGORITHM = "numpy.random.PCG64"
FAMILIES = ("example1", "example2", "gaussian-pair", "product-cube")


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of a synthetic family.

    ``noise`` is the predictor jitter of the example families,
    ``response_noise`` the response noise of example2, ``segment`` the
    range of the shared latent position, ``d`` the dimension of
    product-cube.
    """

    family: str
    n: int
    seed: int = 0
    rho: float = 0.0
    noise: float = 0.05
    response_noise: float = 0.1
    segment: tuple[float, float] = (0.0, 1.0)
    d: int = 3


TRUTH = {
    "example1": "x1 + x2^2",
    "example2": "x1 + x2^2",
    "gaussian-pair": "x1*x2",
}


def generate_synthetic(spec: GeneratorSpec) -> Dataset:
    """Draw a dataset (with response) for ``spec``.

    The returned metadata records the spec, the RNG algorithm and the
    noiseless response expression under ``"truth"``.
    """
    if spec.family not in FAMILIES:
        raise ValueError(f"unknown family {spec.family!r}; choose from {FAMILIES}")
    if spec.n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.n
    if spec.family in ("example1", "example2"):
        lo, hi = spec.segment
        t = rng.uniform(lo, hi, n)
        x1 = t + rng.normal(0.0, spec.noise, n)
        x2 = t + rng.normal(0.0, spec.noise, n)
        X = np.column_stack([x1, x2])
        y = x1 + x2 ** 2
        if spec.family == "example2":
            y = y + rng.normal(0.0, spec.response_noise, n)
        truth = TRUTH[spec.family]
    elif spec.family == "gaussian-pair":
        if not -1.0 < spec.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {spec.rho}")
        z = rng.standard_normal((n, 2))
        x1 = z[:, 0]
        x2 = spec.rho * z[:, 0] + np.sqrt(1.0 - spec.rho ** 2) * z[:, 1]
        X = np.column_stack([x1, x2])
        y = x1 * x2
        truth = TRUTH["gaussian-pair"]
    else:
        if spec.d < 1:
            raise ValueError("d must be >= 1")
        X = rng.uniform(-1.0, 1.0, (n, spec.d))
        y = np.prod(X, axis=1)
        truth = "*".join(f"x{j + 1}" for j in range(spec.d))
    columns = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    meta = {"generator": asdict(spec), "rng": RNG_ALGORITHM, "truth": truth}
    meta["generator"]["segment"] = list(spec.segment)
    return Dataset(columns, X, y, "y", meta)
