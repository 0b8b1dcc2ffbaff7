"""Lower-order field contributions entering the effective field with a minus sign.

Sign conventions (``sign``):

* ``"literal"`` (default): the contribution collects the applied field and
  anisotropy as ``pi(m) = f - C_ani DPhi(m)``, so the applied field acts
  against ``f``.
* ``"physical"``: ``pi(m) = -f + C_ani DPhi(m)``, i.e. the applied field
  enters the effective field as ``+f``.

The anisotropy density is the uniaxial ``Phi(m) = 1 - (axis . m)^2`` with
``DPhi(m) = -2 (axis . m) axis``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("zero", "applied_field", "uniaxial_anisotropy")
SIGNS = ("literal", "physical")


class BoundError(ValueError):
    pass


@dataclass(frozen=True)
class Contribution:
    kind: str = "zero"
    f: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (0.0, 0.0, 1.0)
    c_ani: float = 0.0
    bound: float | None = None
    sign: str = "literal"
    _f: np.ndarray = field(init=False, repr=False, compare=False)
    _axis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown contribution kind {self.kind!r}")
        if self.sign not in SIGNS:
            raise ValueError(f"unknown sign convention {self.sign!r}")
        f = np.asarray(self.f, dtype=float)
        axis = np.asarray(self.axis, dtype=float)
        if f.shape != (3,) or not np.all(np.isfinite(f)):
            raise ValueError("applied field must be a finite 3-vector")
        if self.kind == "uniaxial_anisotropy":
            if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-12:
                raise ValueError("anisotropy axis must be a unit 3-vector")
            if not np.isfinite(self.c_ani):
                raise ValueError("anisotropy constant must be finite")
        if self.bound is not None and not np.isfinite(self.bound):
            raise ValueError("declared bound must be finite")
        object.__setattr__(self, "_f", f)
        object.__setattr__(self, "_axis", axis)

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "applied_field":
            return not np.any(self._f)
        return self.c_ani == 0.0

    def sup_norm(self) -> float:
        """Pointwise bound of ``|pi(m)|`` over unit vectors ``m``."""
        if self.kind == "applied_field":
            return float(np.linalg.norm(self._f))
        if self.kind == "uniaxial_anisotropy":
            return 2.0 * abs(self.c_ani)
        return 0.0


def evaluate_pi(contribution: Contribution, m) -> np.ndarray:
    """Nodal values of ``pi(m)``, shape (N, 3)."""
    mv = m.values if hasattr(m, "values") else np.asarray(m, dtype=float)
    sgn = 1.0 if contribution.sign == "literal" else -1.0
    out = np.zeros_like(mv)
    if contribution.kind == "applied_field":
        out[:] = sgn * contribution._f
    elif contribution.kind == "uniaxial_anisotropy":
        a = contribution._axis
        dphi = -2.0 * (mv @ a)[:, None] * a[None, :]
        out = -sgn * contribution.c_ani * dphi
    return out


def verify_bound(contribution: Contribution, T: float, domain_area: float) -> float:
    """Analytic bound on ``||pi(m)||^2`` over the space-time cylinder.

    Raises ``BoundError`` if a declared bound is smaller than the estimate.
    """
    if T <= 0 or domain_area <= 0:
        raise ValueError("T and domain_area must be positive")
    estimate = domain_area * T * contribution.sup_norm() ** 2
    if contribution.bound is not None and contribution.bound < estimate:
        raise BoundError(f"declared bound {contribution.bound} is below the estimate {estimate}")
    return estimate
