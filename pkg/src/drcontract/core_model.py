"""Model parameters and the consumer-side primitives.

Units throughout: money in pence, power in kW, time in hours.  The nominal
volatility sigma is stored in kW*h^(1/2), so 85 W*h^(1/2) is 0.085.

Every function takes the parameter set first and works on numpy arrays; the
last axis of an effort array indexes usages.
"""

from dataclasses import dataclass, field, fields, replace
import math

import numpy as np


class DomainError(ValueError):
    pass


def _as_vector(values, name):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-D vector")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class ModelParams:
    """Immutable model description.

    ``mu`` has one entry per drift-effort channel, ``lam`` and ``sigma`` one
    entry per usage.  ``a_max`` of None resolves to ten times the largest
    payment rate a linear contract can produce (see :attr:`A`).  ``r0`` is the
    reservation utility; the default -1 gives a zero certainty equivalent.
    """

    T: float
    kappa: float
    theta: float
    h: float
    p: float
    r: float
    mu: tuple
    lam: tuple
    sigma: tuple
    eps: float = 1e-3
    a_max: float = None
    x0: float = 0.0
    r0: float = -1.0
    delta: float = None

    def __post_init__(self):
        object.__setattr__(self, "mu", _as_vector(self.mu, "mu"))
        object.__setattr__(self, "lam", _as_vector(self.lam, "lam"))
        object.__setattr__(self, "sigma", _as_vector(self.sigma, "sigma"))
        for name in ("T", "kappa", "theta", "h", "p", "r", "eps", "x0", "r0"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite")
        if self.T <= 0:
            raise DomainError("T must be positive")
        if self.p <= 0:
            raise DomainError("producer risk aversion p must be positive")
        if self.r < 0:
            raise DomainError("consumer risk aversion r must be nonnegative")
        if self.h < 0:
            raise DomainError("h must be nonnegative")
        if min(self.mu) <= 0 or min(self.lam) <= 0 or min(self.sigma) <= 0:
            raise DomainError("mu, lam and sigma entries must be positive")
        if len(self.lam) != len(self.sigma):
            raise DomainError("lam and sigma must have one entry per usage")
        if not 0 < self.eps < 1:
            raise DomainError("eps must lie in (0, 1)")
        if self.a_max is not None and self.a_max <= 0:
            raise DomainError("a_max must be positive")
        if self.r0 >= 0:
            raise DomainError("reservation utility r0 must be negative")
        if self.r == 0 and self.r0 != -1.0:
            raise DomainError("r = 0 only supports the r0 = -1 convention")
        diff = self.kappa - self.theta
        if self.delta is None:
            object.__setattr__(self, "delta", diff)
        elif abs(self.delta - diff) > 1e-9 * max(1.0, abs(self.kappa), abs(self.theta)):
            raise DomainError(f"delta={self.delta} inconsistent with kappa - theta = {diff}")

    @property
    def mu_bar(self):
        return float(sum(self.mu))

    @property
    def sigma_sq(self):
        """|sigma|^2, the nominal aggregate variance rate."""
        return float(sum(s * s for s in self.sigma))

    @property
    def sigma_norm(self):
        return math.sqrt(self.sigma_sq)

    @property
    def rho(self):
        """Aggregate risk aversion rp/(r+p) of the two parties."""
        return self.r * self.p / (self.r + self.p)

    @property
    def lam_max(self):
        return max(self.lam)

    @property
    def n_usages(self):
        return len(self.sigma)

    @property
    def A(self):
        if self.a_max is not None:
            return float(self.a_max)
        return 10.0 * max(abs(self.delta), abs(self.kappa), 1.0) * self.T

    @property
    def l0(self):
        """Certainty equivalent of the reservation utility."""
        if self.r == 0:
            return 0.0
        return -math.log(-self.r0) / self.r + 0.0

    def with_l0(self, l0):
        """Copy with the reservation utility set from a certainty equivalent."""
        if self.r == 0:
            if l0 != 0:
                raise DomainError("r = 0 only supports l0 = 0")
            return replace(self, r0=-1.0)
        return replace(self, r0=-math.exp(-self.r * l0))

    def replace(self, **changes):
        """dataclasses.replace that keeps delta in sync with kappa/theta."""
        d = changes.pop("delta", None)
        if d is not None:
            # a new delta moves theta unless only theta was given
            if "theta" in changes and "kappa" not in changes:
                changes["kappa"] = changes["theta"] + d
            else:
                changes["theta"] = changes.get("kappa", self.kappa) - d
        return replace(self, delta=None, **changes)


@dataclass(frozen=True)
class Effort:
    a: np.ndarray
    b: np.ndarray
    params: ModelParams = field(repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        mu = np.asarray(self.params.mu)
        if np.any(a < 0) or np.any(a > mu * self.params.A * (1 + 1e-12)):
            raise DomainError("drift effort outside [0, mu*A_max]")
        if np.any(b < self.params.eps * (1 - 1e-12)) or np.any(b > 1):
            raise DomainError("volatility control outside [eps, 1]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def nominal_params(**overrides):
    """Nominal single-usage calibration."""
    base = dict(T=5.5, kappa=11.76, theta=67.2, h=4e-4, p=0.6e-2, r=0.57e-2,
                mu=(9.3e-5,), lam=(2.8e-2,), sigma=(0.085,))
    base.update(overrides)
    return ModelParams(**base)


def two_usage_params(**overrides):
    """Two-usage illustration; r is not part of that set and uses the nominal value."""
    base = dict(T=1.0, kappa=5.0, theta=2.0, h=0.0, p=1.0, r=0.57e-2,
                mu=(2.0, 5.0), lam=(0.5, 0.1), sigma=(5.0, 2.0))
    base.update(overrides)
    return ModelParams(**base)


def split_usages(params, weights):
    """Spread a single-usage calibration over several usages.

    mu and lam are split linearly and the variance |sigma|^2 is split with
    the same weights, so the nominal aggregate volatility is unchanged.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
        raise DomainError("weights must be positive and sum to one")
    return params.replace(mu=tuple(params.mu_bar * w),
                          lam=tuple(params.lam[0] * w) if len(params.lam) == 1 else params.lam,
                          sigma=tuple(np.sqrt(params.sigma_sq * w)))


# costs

def cost_drift(params, a):
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise DomainError("drift effort must be nonnegative")
    return 0.5 * np.sum(a ** 2 / np.asarray(params.mu), axis=-1)


def cost_vol(params, b):
    b = np.asarray(b, dtype=float)
    if np.any(b <= 0) or np.any(b > 1):
        raise DomainError("volatility control must lie in (0, 1]")
    scale = np.asarray(params.sigma) ** 2 / np.asarray(params.lam)
    return np.sum(scale * (1.0 / b - 1.0), axis=-1)


def sigma_of(params, b):
    """Per-usage volatility vector sigma_j*sqrt(b_j)."""
    return np.asarray(params.sigma) * np.sqrt(np.asarray(b, dtype=float))


def vol_sq(params, b):
    """Aggregate variance rate |sigma(b)|^2."""
    return np.sum(np.asarray(params.sigma) ** 2 * np.asarray(b, dtype=float), axis=-1)


# best responses

def best_response_drift(params, z):
    z = np.asarray(z, dtype=float)
    m = np.minimum(np.maximum(-z, 0.0), params.A)
    return m[..., None] * np.asarray(params.mu)


def best_response_vol(params, gamma):
    g = np.maximum(-np.asarray(gamma, dtype=float), 0.0)[..., None]
    lam = np.asarray(params.lam)
    with np.errstate(divide="ignore"):
        raw = np.where(g > 0, (lam * g) ** -0.5, np.inf)
    return np.maximum(params.eps, np.minimum(1.0, raw))


# Hamiltonians

def hamiltonian_mean(params, z):
    """-min over admissible a of a.1*z + c1(a).

    Without clipping this is mu_bar*(z^-)^2/2.  Once z^- exceeds A_max the
    optimal effort sits on the bound and the envelope keeps growing linearly.
    """
    zm = np.maximum(-np.asarray(z, dtype=float), 0.0)
    m = np.minimum(zm, params.A)
    return params.mu_bar * (m * zm - 0.5 * m * m)


def hamiltonian_vol(params, gamma):
    gamma = np.asarray(gamma, dtype=float)
    b = best_response_vol(params, gamma)
    return -0.5 * (cost_vol(params, b) - gamma * vol_sq(params, b))


def vol_cost_envelope(params, q):
    """F0(q), the cheapest combined volatility charge q|sigma(b)|^2 + c2(b).

    Closed form per usage; equals -2*hamiltonian_vol(-q).
    """
    q = np.asarray(q, dtype=float)
    shape = q.shape
    q = q.reshape(-1)
    cut = params.eps ** -2
    total = np.zeros(q.shape)
    for s, lam in zip(params.sigma, params.lam):
        x = lam * q
        hi = x > 1.0
        if hi.any():
            xh = x[hi]
            x[hi] = np.where(xh < cut, 2.0 * np.sqrt(xh) - 1.0, xh * params.eps + 1.0 / params.eps - 1.0)
        x *= s * s / lam
        total += x
    return total.reshape(shape)


def drift_objective(params, z, vx):
    """mu_bar*(min(z^-, A) + vx)^2, the drift part of the producer's minimisation."""
    m = np.minimum(np.maximum(-np.asarray(z, dtype=float), 0.0), params.A)
    return params.mu_bar * (m + vx) ** 2


def eta_a(params, z, vx):
    """Correction term (vx + (z^- - A)^+)^2 - vx^2; zero unless A_max binds."""
    over = np.maximum(np.maximum(-np.asarray(z, dtype=float), 0.0) - params.A, 0.0)
    return (vx + over) ** 2 - vx ** 2


PARAM_KEYS = tuple(f.name for f in fields(ModelParams))
