"""Common container for the manifolds in the zoo."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..ambient import AmbientSpace
from ..bundle import ConstraintMap, MetricField, ProjectionField
from ..connection import ChristoffelField
from ..submersion import Splitting


@dataclass(frozen=True)
class ManifoldPackage:
    """Everything the generic machinery needs about one manifold.

    Parameters
    ----------
    name : str
    space : AmbientSpace
    pi : ProjectionField
        Tangent projector used for cotangent bundles and Hamilton fields.
    metric : MetricField
    sample_point : callable
        ``rng -> q``.
    pi_g : ProjectionField, optional
        Metric-compatible projector, defaults to ``pi``.
    christoffel : ChristoffelField, optional
        Closed-form Levi-Civita connection.
    curvature : callable, optional
        Closed-form ``(q, xi, eta, phi) -> R_{xi, eta} phi``.
    constraint : ConstraintMap, optional
    splitting : Splitting, optional
    params : dict
    """

    name: str
    space: AmbientSpace
    pi: ProjectionField
    metric: MetricField
    sample_point: Callable
    pi_g: ProjectionField | None = None
    christoffel: ChristoffelField | None = None
    curvature: Callable | None = None
    constraint: ConstraintMap | None = None
    splitting: Splitting | None = None
    params: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.space.dim

    @property
    def metric_projector(self):
        return self.pi_g if self.pi_g is not None else self.pi

    def sample_tangent(self, q, rng):
        return self.metric_projector.apply(q, self.space.random(rng))

    def sample_cotangent(self, q, rng):
        return self.pi.T(q, self.space.random(rng))

    def sample_horizontal(self, q, rng):
        if self.splitting is None:
            raise ValueError(f"{self.name} has no splitting")
        return self.splitting.horizontal.apply(q, self.space.random(rng))


def random_orthogonal(rng, n):
    """Haar-distributed orthogonal matrix."""
    z = rng.standard_normal((n, n))
    qm, r = np.linalg.qr(z)
    return qm * np.sign(np.diag(r))


def random_stiefel(rng, n, k):
    return random_orthogonal(rng, n)[:, :k]
