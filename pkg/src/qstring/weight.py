"""The q-lattice weight ``((q x)^4; q^4)_inf |x|^kappa (1-q)^(-kappa/4)`` and its normalization."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp

from .exceptions import DomainError
from .qcore import PrecisionCfg, QParams, q_integral, q_pochhammer_inf, to_mpf

__all__ = ["NormalizedWeight", "weight_eval", "normalize"]


def weight_eval(x, p: QParams, cfg: PrecisionCfg) -> mpmath.mpf:
    """Unnormalized weight at ``x`` in [-1, 1].

    ``x = 0`` is defined by continuity (0 for ``kappa > 0``, 1 for
    ``kappa = 0``) but never occurs on the lattice.
    """
    with cfg.workprec():
        x = to_mpf(x)
        if abs(x) > 1:
            raise DomainError(f"weight is only defined on [-1,1], got x={x}")
        q = p.q_value()
        kappa = p.kappa_value()
        ax = abs(x)
        poch = q_pochhammer_inf((q * ax) ** 4, q**4, cfg).value
        if p.kappa == 0:
            return poch
        return poch * mp.power(ax, kappa) * mp.power(1 - q, -kappa / 4)


@dataclass(frozen=True)
class NormalizedWeight:
    """Weight divided by its Jackson integral ``Z`` over [-1, 1]."""

    params: QParams
    Z: mpmath.mpf
    cfg: PrecisionCfg

    def eval(self, x) -> mpmath.mpf:
        with self.cfg.workprec():
            return weight_eval(x, self.params, self.cfg) / self.Z

    __call__ = eval


def normalize(p: QParams, cfg: PrecisionCfg) -> NormalizedWeight:
    Z = q_integral(lambda x: weight_eval(x, p, cfg), p, cfg)
    if not Z > 0:
        raise RuntimeError(f"normalization constant is not positive ({Z}); Pochhammer evaluation is broken")
    return NormalizedWeight(p, Z, cfg)
