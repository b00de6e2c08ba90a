"""Concrete manifolds packaged for the generic machinery."""

from dataclasses import replace

from ..errors import SpecInvalid
from .kim_mccann import make_km_fixed_rank, make_km_grassmann
from .rigid import make_se_n
from .sphere import make_sphere
from .stiefel import make_stiefel


def make_grassmann(n=5, k=2):
    """Grassmann manifold as the quotient of the Stiefel package."""
    return replace(make_stiefel(n, k), name="grassmann")


FACTORIES = {
    "sphere": make_sphere,
    "se_n": make_se_n,
    "stiefel": make_stiefel,
    "grassmann": make_grassmann,
    "km_fixed_rank": make_km_fixed_rank,
    "km_grassmann": make_km_grassmann,
}


def make_package(name, **params):
    """Build a zoo package by name.

    Raises
    ------
    SpecInvalid
        Unknown name or parameters rejected by the constructor.
    """
    if name not in FACTORIES:
        raise SpecInvalid(f"unknown manifold {name!r}; choose from {sorted(FACTORIES)}")
    try:
        return FACTORIES[name](**params)
    except (TypeError, ValueError) as exc:
        raise SpecInvalid(f"invalid parameters for {name}: {exc}") from exc
