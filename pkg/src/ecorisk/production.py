"""Production functions combining contributor availability and upstream health.

A library keeps working when both its maintainers are around and its upstream
dependencies function. The production function turns the two input shares
(each in [0, 1]) into a survival probability; failure is the complement.
Three functional forms are supported:

* ``cobb-douglas``: c**a * d**(1-a), inputs are imperfect substitutes
  (default a = 1/2).
* ``leontief``: min(c, d), inputs cannot substitute at all.
* ``linear``: (c + d) / 2, inputs are perfect substitutes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COBB_DOUGLAS = "cobb-douglas"
LEONTIEF = "leontief"
LINEAR = "linear"

KINDS = (COBB_DOUGLAS, LEONTIEF, LINEAR)


@dataclass(frozen=True)
class ProductionFunction:
    """A survival rule for one library given its two input shares.

    ``exponent`` is the contributor-share exponent of the Cobb-Douglas form;
    the upstream exponent is its complement so the two always sum to 1. It is
    ignored by the other kinds.
    """

    kind: str = COBB_DOUGLAS
    exponent: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown production function kind: {self.kind!r}")
        if self.kind == COBB_DOUGLAS and not 0.0 < self.exponent < 1.0:
            raise ValueError(
                f"cobb-douglas exponent must lie in (0, 1), got {self.exponent}"
            )


def _check_unit_interval(name: str, value) -> None:
    arr = np.asarray(value, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} outside [0, 1]: {value!r}")


def survival(pf: ProductionFunction, c_share, d_share):
    """Survival probability for contributor share ``c_share`` and upstream
    share ``d_share``. Accepts scalars or numpy arrays; inputs must lie in
    [0, 1] (violations signal an upstream bug and are rejected).
    """
    _check_unit_interval("c_share", c_share)
    _check_unit_interval("d_share", d_share)
    c = np.asarray(c_share, dtype=float)
    d = np.asarray(d_share, dtype=float)
    if pf.kind == COBB_DOUGLAS:
        out = c ** pf.exponent * d ** (1.0 - pf.exponent)
    elif pf.kind == LEONTIEF:
        out = np.minimum(c, d)
    else:
        out = (c + d) / 2.0
    if np.isscalar(c_share) and np.isscalar(d_share):
        return float(out)
    return out


def failure(pf: ProductionFunction, c_share, d_share):
    """Failure probability: 1 - survival."""
    return 1.0 - survival(pf, c_share, d_share)
