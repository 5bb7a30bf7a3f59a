"""Closed-form predictions for the aggregation model.

For homogeneous cluster speed (mobility exponent alpha = 0) the tagged
cluster size rescaled by sqrt(t) converges to an x^2-weighted Gaussian law
parameterized by the occupation probability p.  For alpha > -2 cluster sizes
grow like t^(1/(alpha+2)); the affine recursion gamma_{n+1} = (1 - alpha*gamma_n)/2
converges to that exponent from below and diverges once alpha < -2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidParams

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class LimitLawParams:
    """Parameters of the alpha=0 scaling-limit law for occupation probability p."""

    p: float
    eta: float = field(init=False)
    a: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InvalidParams(f"p must lie in (0,1), got {self.p}")
        eta = 1.0 / self.p
        a = (eta - 1.0) / 2.0
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "gamma", a * a)


def _phi_std(z: float) -> float:
    # standard normal CDF via erfc; relative error <= 1e-14 over the real line
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def limit_cdf(x: float, params: LimitLawParams) -> float:
    """CDF of the rescaled tagged-cluster size |c0(t)|/sqrt(t) in the t->inf limit."""
    if x <= 0.0:
        return 0.0
    ax = params.a * x
    val = 2.0 * _phi_std(ax) - (2.0 * ax / _SQRT_2PI) * math.exp(-0.5 * ax * ax) - 1.0
    # clamp float noise at the tails
    return min(max(val, 0.0), 1.0)


def limit_pdf(x: float, params: LimitLawParams) -> float:
    """Density of the limit law: (2 gamma^(3/2) / sqrt(2 pi)) x^2 exp(-gamma x^2 / 2) on x > 0.

    This is the exact derivative of limit_cdf.  The unnormalized weighted-Gaussian
    form gamma x^2/sqrt(2 pi) e^(-gamma x^2/2) integrates to 1/(2 sqrt(gamma)), not 1;
    the 2 gamma^(3/2) prefactor is the normalized version.
    """
    if x <= 0.0:
        return 0.0
    g = params.gamma
    return (2.0 * g**1.5 / _SQRT_2PI) * x * x * math.exp(-0.5 * g * x * x)


def limit_mean(params: LimitLawParams) -> float:
    """Mean of the limit law: 8 / (sqrt(2 pi) (eta - 1))."""
    return 8.0 / (_SQRT_2PI * (params.eta - 1.0))


def limit_ppf(q: float, params: LimitLawParams, tol: float = 1e-12) -> float:
    """Quantile function of the limit law by bisection on limit_cdf."""
    if not 0.0 <= q < 1.0:
        raise InvalidParams(f"quantile level must lie in [0,1), got {q}")
    if q == 0.0:
        return 0.0
    lo, hi = 0.0, 1.0 / params.a
    while limit_cdf(hi, params) < q:
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if limit_cdf(mid, params) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_limit_law(n: int, params: LimitLawParams, stream) -> list[float]:
    """n inverse-transform draws from the limit law using the given random stream."""
    return [limit_ppf(stream.next_double(), params) for _ in range(n)]


def gamma_sequence(alpha: float, n: int) -> list[float]:
    """First n terms of gamma_1 = 1/2, gamma_{k+1} = (1 - alpha*gamma_k)/2."""
    if n < 1:
        raise InvalidParams(f"need n >= 1, got {n}")
    out = []
    g = 0.5
    for _ in range(n):
        out.append(g)
        g = (1.0 - alpha * g) / 2.0
    return out


def growth_exponent(alpha: float) -> float:
    """Asymptotic size exponent 1/(alpha+2); undefined in the blow-up regime alpha <= -2."""
    if alpha <= -2.0:
        raise InvalidParams(
            f"growth exponent undefined for alpha <= -2 (blow-up regime), got {alpha}"
        )
    return 1.0 / (alpha + 2.0)
