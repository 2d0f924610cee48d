"""gpwb: moment maps, slope stability and vortex-type gauge flows for
products of unitary groups, on finite-dimensional models and on a
discretized flat torus."""

from .groups import (
    AlgebraElement,
    GroupElement,
    ProductGroupSpec,
    SubgroupSetting,
    cartan_involution,
    exp_element,
    inner_product,
    project_subalgebra,
)
from .reps import RepSpec, Slot, act, infinitesimal_act, mu_full, mu_shifted

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement",
    "GroupElement",
    "ProductGroupSpec",
    "SubgroupSetting",
    "RepSpec",
    "Slot",
    "act",
    "cartan_involution",
    "exp_element",
    "infinitesimal_act",
    "inner_product",
    "mu_full",
    "mu_shifted",
    "project_subalgebra",
]
