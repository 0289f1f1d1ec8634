#!/usr/bin/env python
"""
Fading laws, block-constant gain processes and Poisson photon counts.

Every random model is normalised to unit mean gain. The scintillation index
is the normalised intensity variance E[h^2]/E[h]^2 - 1.
"""
import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import utils


_logger = logging.getLogger(__name__)


MAX_POISSON_MEAN = 1e9

WAVES = ('spherical', 'plane')

# Rytov variance search range for the Gamma-Gamma inversion
_RYTOV_UPPER = 100.0


@dataclass(frozen=True)
class ChannelParams:
    """Signal and background counts per slot, and the coherence length in slots."""
    n_s: float
    n_b: float
    l_c: int = 10000

    def __post_init__(self):
        if not self.n_s >= 0:
            raise utils.ParameterDomainError(f"n_s must be non-negative (got {self.n_s!r})")
        if not self.n_b > 0:
            raise utils.ParameterDomainError(f"n_b must be positive (got {self.n_b!r})")
        if int(self.l_c) != self.l_c or self.l_c < 1:
            raise utils.ParameterDomainError(f"l_c must be an integer >= 1 (got {self.l_c!r})")

    def with_signal(self, n_s):
        return dataclasses.replace(self, n_s=n_s)


##################
# Fading models  #
##################

@dataclass(frozen=True)
class Constant:
    """No fading: the gain is h in every slot."""
    h: float = 1.0

    def __post_init__(self):
        if not self.h > 0:
            raise utils.ParameterDomainError(f"h must be positive (got {self.h!r})")

    @property
    def scintillation_index(self):
        return 0.0

    def sample(self, rng, size):
        return np.full(size, float(self.h))


@dataclass(frozen=True)
class LogNormal:
    """h = exp(2x), x ~ N(mu_x, sigma_x2), with mu_x = -sigma_x2 so that E[h] = 1."""
    mu_x: float
    sigma_x2: float

    def __post_init__(self):
        if not self.sigma_x2 > 0:
            raise utils.ParameterDomainError(f"sigma_x2 must be positive (got {self.sigma_x2!r})")
        if not math.isclose(self.mu_x, -self.sigma_x2, rel_tol=1e-12):
            raise utils.ParameterDomainError(
                f"mu_x must equal -sigma_x2 for a unit-mean gain (got {self.mu_x!r}, {self.sigma_x2!r})")

    @property
    def scintillation_index(self):
        return math.expm1(4.0 * self.sigma_x2)

    def sample(self, rng, size):
        return np.exp(2.0 * rng.normal(self.mu_x, math.sqrt(self.sigma_x2), size))


@dataclass(frozen=True)
class GammaGamma:
    """Product of two independent unit-mean Gamma variates with shapes alpha and beta."""
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise utils.ParameterDomainError(
                f"alpha and beta must be positive (got {self.alpha!r}, {self.beta!r})")

    @property
    def scintillation_index(self):
        return si_of_gammagamma(self.alpha, self.beta)

    def sample(self, rng, size):
        large = rng.gamma(self.alpha, 1.0 / self.alpha, size)
        small = rng.gamma(self.beta, 1.0 / self.beta, size)
        return large * small


@utils.check_positive('si')
def lognormal_from_si(si):
    """
    Log-normal model with unit mean gain and scintillation index si.

    S.I. = exp(4 sigma_x2) - 1, hence sigma_x2 = ln(1 + si) / 4.

    :param si: scintillation index, > 0
    :return: LogNormal
    """
    sigma_x2 = math.log1p(si) / 4.0
    if sigma_x2 < 1e-9:
        _logger.warning("scintillation index %r is effectively no fading, gains will all be close to 1", si)
    return LogNormal(mu_x=-sigma_x2, sigma_x2=sigma_x2)


@utils.check_positive('alpha', 'beta')
def si_of_gammagamma(alpha, beta):
    return 1.0 / alpha + 1.0 / beta + 1.0 / (alpha * beta)


def _inverse_shapes(rytov_variance, wave):
    # (1/alpha, 1/beta) at zero inner scale; sigma^(12/5) == (sigma^2)^(6/5)
    s = rytov_variance
    s_pow = s ** 1.2
    large_scale = 0.56 if wave == 'spherical' else 1.11
    alpha_inv = math.expm1(0.49 * s / (1.0 + large_scale * s_pow) ** (7.0 / 6.0))
    beta_inv = math.expm1(0.51 * s / (1.0 + 0.69 * s_pow) ** (5.0 / 6.0))
    return alpha_inv, beta_inv


def _si_of_rytov(rytov_variance, wave):
    alpha_inv, beta_inv = _inverse_shapes(rytov_variance, wave)
    return alpha_inv + beta_inv + alpha_inv * beta_inv


def _check_wave(wave):
    if wave not in WAVES:
        raise utils.ParameterDomainError(f"wave must be one of {WAVES} (got {wave!r})")


@utils.check_positive('rytov_variance')
def gammagamma_from_rytov(rytov_variance, wave='spherical'):
    """Gamma-Gamma shapes for a given Rytov variance."""
    _check_wave(wave)
    alpha_inv, beta_inv = _inverse_shapes(rytov_variance, wave)
    return GammaGamma(alpha=1.0 / alpha_inv, beta=1.0 / beta_inv)


def max_gammagamma_si(wave='spherical'):
    """
    Return (rytov_variance, si) at the peak of the S.I. curve.

    Below the peak the S.I. increases monotonically with the Rytov variance,
    which is the branch gammagamma_from_si searches.
    """
    _check_wave(wave)
    result = optimize.minimize_scalar(lambda s: -_si_of_rytov(s, wave),
                                      bounds=(1e-3, _RYTOV_UPPER),
                                      method='bounded',
                                      options={'xatol': 1e-10})
    return float(result.x), float(-result.fun)


@utils.check_positive('si')
def gammagamma_from_si(si, wave='spherical'):
    """
    Gamma-Gamma model whose scintillation index equals si.

    Bisects the Rytov variance on its increasing branch, [0, peak], and maps
    it to (alpha, beta). The spherical-wave point-receiver form reaches an
    S.I. of about 1.69, the plane-wave form only about 1.25.

    :param si: target scintillation index, > 0
    :param wave: 'spherical' (default) or 'plane'
    :raises UnattainableScintillationError: si above the curve's peak
    """
    _check_wave(wave)
    peak, si_max = max_gammagamma_si(wave)
    if si >= si_max:
        raise utils.UnattainableScintillationError(si, (0.0, peak), si_max)

    rytov = optimize.bisect(lambda s: _si_of_rytov(s, wave) - si, 0.0, peak,
                            xtol=1e-14, maxiter=400)
    _logger.debug("gammagamma_from_si(%r, %s): rytov variance %.12g", si, wave, rytov)
    return gammagamma_from_rytov(rytov, wave)


def build_model(name, si=None, h=None, alpha=None, beta=None, wave='spherical'):
    """Construct a fading model from its configuration name and parameters."""
    if name == 'constant':
        return Constant(1.0 if h is None else h)
    if name == 'lognormal':
        return lognormal_from_si(si)
    if name == 'gammagamma':
        if alpha is not None or beta is not None:
            return GammaGamma(alpha, beta)
        return gammagamma_from_si(si, wave=wave)
    raise utils.ParameterDomainError(f"unknown fading model {name!r}")


def sample_moments(gains):
    """Return (sample mean, sample scintillation index) of a gain sample."""
    gains = np.asarray(gains, dtype=float)
    mean = gains.mean()
    # E[h^2]/E[h]^2 - 1 == var/mean^2
    return float(mean), float(gains.var() / mean ** 2)


################
# Gain process #
################

class GainProcess:
    """
    Block-constant gain: held for exactly l_c slots, then redrawn independently.

    The process owns its generator and is confined to one execution context.
    sample_gain() and gains(n) each produce a reproducible sequence for a
    given seed, but they consume the generator differently and are not meant
    to be mixed when comparing sequences.
    """

    def __init__(self, model, l_c, rng):
        if int(l_c) != l_c or l_c < 1:
            raise utils.ParameterDomainError(f"l_c must be an integer >= 1 (got {l_c!r})")
        self.model = model
        self.l_c = int(l_c)
        self._rng = rng
        self._h = None
        self._remaining = 0

    @property
    def current_gain(self):
        return self._h

    @property
    def remaining(self):
        return self._remaining

    def sample_gain(self):
        if self._remaining == 0:
            self._h = float(self.model.sample(self._rng, 1)[0])
            self._remaining = self.l_c
        self._remaining -= 1
        return self._h

    def gains(self, n):
        """Return the next n per-slot gains, continuing the current block."""
        out = np.empty(n, dtype=float)
        head = min(self._remaining, n)
        if head:
            out[:head] = self._h
            self._remaining -= head
        rest = n - head
        if rest:
            n_blocks = -(-rest // self.l_c)
            draws = self.model.sample(self._rng, n_blocks)
            out[head:] = np.repeat(draws, self.l_c)[:rest]
            self._h = float(draws[-1])
            self._remaining = n_blocks * self.l_c - rest
        return out


def sample_gain(process):
    return process.sample_gain()


#################
# Photon counts #
#################

def poisson_counts(means, rng):
    """Draw Poisson counts, rejecting unphysical means above MAX_POISSON_MEAN."""
    means = np.asarray(means, dtype=float)
    if np.any(means > MAX_POISSON_MEAN):
        raise utils.ParameterDomainError(
            f"Poisson mean {float(means.max()):.6g} exceeds {MAX_POISSON_MEAN:.0e}")
    return rng.poisson(means)


@utils.check_binary('bit')
@utils.check_positive('h')
def transmit_slot(bit, h, params, rng):
    """Photon count of one slot: Poisson(n_s * h * bit + n_b)."""
    return int(poisson_counts(params.n_s * h * bit + params.n_b, rng))


def transmit(bits, gains, params, rng):
    """Vectorised transmit_slot over aligned bit and gain arrays."""
    bits = np.asarray(bits)
    return poisson_counts(params.n_s * np.asarray(gains) * bits + params.n_b, rng)
