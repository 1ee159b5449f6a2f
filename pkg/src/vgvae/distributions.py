"""von Mises-Fisher and diagonal Gaussian posteriors.

Randomness always comes from a caller-owned ``numpy.random.Generator``; the
draws are turned into tensors so that gradients flow through the
reparameterized path only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .kernels import DEBYE_COEFFS, log_iv_array

KAPPA_FLOOR = 1e-4
LOGVAR_MIN, LOGVAR_MAX = -8.0, 8.0


def bessel_crossover(order: float) -> float:
    """Argument at which log_bessel_iv switches from the series to the uniform expansion."""
    return max(20.0, 2.0 * order)


def _log_iv_numpy(order, x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 0)):
        raise ValueError("log_bessel_iv requires x > 0")
    if order < 0:
        raise ValueError("log_bessel_iv requires order >= 0")
    flat = np.ascontiguousarray(x.reshape(-1))
    return log_iv_array(float(order), flat, DEBYE_COEFFS).reshape(x.shape)


class _LogBesselIv(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, order):
        out = _log_iv_numpy(order, x.detach().cpu().numpy())
        out = torch.as_tensor(out, dtype=x.dtype, device=x.device)
        ctx.save_for_backward(x, out)
        ctx.order = order
        return out

    @staticmethod
    def backward(ctx, grad):
        x, out = ctx.saved_tensors
        # d/dx log I_v(x) = I_{v+1}(x) / I_v(x) + v / x
        nxt = torch.as_tensor(_log_iv_numpy(ctx.order + 1.0, x.detach().cpu().numpy()),
                              dtype=x.dtype, device=x.device)
        return grad * (torch.exp(nxt - out) + ctx.order / x), None


def log_bessel_iv(order, x):
    """log of the modified Bessel function of the first kind, log I_order(x).

    Uses the power series below ``bessel_crossover(order)`` and the uniform
    (Debye) asymptotic expansion above it.  Accepts floats, numpy arrays or
    tensors; tensors are differentiable in ``x``.
    """
    if isinstance(x, torch.Tensor):
        if torch.any(x <= 0):
            raise ValueError("log_bessel_iv requires x > 0")
        return _LogBesselIv.apply(x, float(order))
    out = _log_iv_numpy(order, x)
    return float(out) if out.ndim == 0 else out


def mean_resultant_length(dim: int, kappa: float) -> float:
    """Expected norm of the vMF mean, I_{m/2}(kappa) / I_{m/2-1}(kappa)."""
    if kappa == 0:
        return 0.0
    return math.exp(log_bessel_iv(dim / 2.0, kappa) - log_bessel_iv(dim / 2.0 - 1.0, kappa))


@dataclass
class VmfParams:
    mu: torch.Tensor  # (..., m), unit norm
    kappa: torch.Tensor  # (...)

    def validate(self, tol: float = 1e-6):
        norms = self.mu.detach().norm(dim=-1)
        if torch.any((norms - 1).abs() > tol):
            raise ValueError("vMF mean direction must have unit norm")
        if torch.any(self.kappa.detach() < 0):
            raise ValueError("vMF concentration must be nonnegative")
        return self

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]


@dataclass
class GaussianParams:
    mu: torch.Tensor  # (..., d)
    sigma: torch.Tensor  # (..., d), positive

    def validate(self):
        if self.mu.shape != self.sigma.shape:
            raise ValueError("Gaussian mean and scale shapes differ")
        if torch.any(self.sigma.detach() <= 0):
            raise ValueError("Gaussian scale must be positive")
        return self

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]


def kappa_from_raw(raw: torch.Tensor) -> torch.Tensor:
    return F.softplus(raw) + KAPPA_FLOOR


def gaussian_from_logvar(mu: torch.Tensor, logvar: torch.Tensor) -> GaussianParams:
    logvar = logvar.clamp(LOGVAR_MIN, LOGVAR_MAX)
    return GaussianParams(mu, torch.exp(0.5 * logvar))


# --- vMF -------------------------------------------------------------------

def _wood_b(kappa, dim):
    # b = (m-1) / (2k + sqrt(4k^2 + (m-1)^2)), written to stay finite at k = 0
    return (dim - 1) / (2 * kappa + np.sqrt(4 * kappa ** 2 + (dim - 1) ** 2))


def draw_vmf_noise(kappa, dim: int, rng: np.random.Generator):
    """Rejection-sample the auxiliary Beta variable of Wood's algorithm.

    ``kappa`` is an array of concentrations.  Returns ``(eps, tangent, rounds)``
    where ``eps`` are the accepted Beta draws, ``tangent`` are uniform unit
    vectors in R^(m-1) and ``rounds`` counts proposal rounds per draw.
    """
    if dim < 2:
        raise ValueError("vMF needs dimension >= 2")
    kappa = np.asarray(kappa, dtype=np.float64)
    shape = kappa.shape
    k = kappa.reshape(-1)
    n = k.shape[0]
    b = _wood_b(k, dim)
    x0 = (1 - b) / (1 + b)
    c = k * x0 + (dim - 1) * np.log1p(-x0 ** 2)
    alpha = (dim - 1) / 2.0

    eps = np.empty(n)
    rounds = np.zeros(n, dtype=np.int64)
    todo = np.arange(n)
    while todo.size:
        rounds[todo] += 1
        e = rng.beta(alpha, alpha, size=todo.size)
        u = rng.uniform(size=todo.size)
        bt, kt = b[todo], k[todo]
        w = (1 - (1 + bt) * e) / (1 - (1 - bt) * e)
        ok = kt * w + (dim - 1) * np.log1p(-x0[todo] * w) - c[todo] >= np.log(u)
        eps[todo[ok]] = e[ok]
        todo = todo[~ok]

    tangent = rng.standard_normal((n, dim - 1))
    tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
    return eps.reshape(shape), tangent.reshape(shape + (dim - 1,)), rounds.reshape(shape)


def vmf_transform(mu: torch.Tensor, kappa: torch.Tensor, eps: torch.Tensor,
                  tangent: torch.Tensor) -> torch.Tensor:
    """Deterministic map from accepted noise to a vMF sample.

    This is the reparameterized path: gradients reach ``mu`` and ``kappa``
    with the noise held fixed.  The score term of the acceptance step is
    deliberately left out.
    """
    dim = mu.shape[-1]
    b = (dim - 1) / (2 * kappa + torch.sqrt(4 * kappa ** 2 + (dim - 1) ** 2))
    denom = 1 - (1 - b) * eps
    w = (1 - (1 + b) * eps) / denom
    one_minus_w = 2 * b * eps / denom
    radial = torch.sqrt(torch.clamp(one_minus_w * (2 - one_minus_w), min=1e-30))
    north = torch.cat([w.unsqueeze(-1), radial.unsqueeze(-1) * tangent], dim=-1)

    # Householder reflection taking e1 to mu
    e1 = torch.zeros_like(mu)
    e1[..., 0] = 1.0
    u = e1 - mu
    unorm2 = (u * u).sum(-1, keepdim=True)
    safe = unorm2 > 1e-24
    coef = torch.where(safe, 2 * (u * north).sum(-1, keepdim=True) / torch.where(safe, unorm2, torch.ones_like(unorm2)),
                       torch.zeros_like(unorm2))
    return north - coef * u


def vmf_sample(params: VmfParams, rng: np.random.Generator, return_rounds: bool = False):
    """Draw one reparameterized sample per batch element."""
    kappa = params.kappa
    eps, tangent, rounds = draw_vmf_noise(kappa.detach().cpu().numpy(), params.dim, rng)
    eps = torch.as_tensor(eps, dtype=params.mu.dtype)
    tangent = torch.as_tensor(tangent, dtype=params.mu.dtype)
    out = vmf_transform(params.mu, kappa, eps, tangent)
    return (out, rounds) if return_rounds else out


def vmf_kl_to_uniform(params: VmfParams) -> torch.Tensor:
    """KL(vMF(mu, kappa) || uniform on the sphere); independent of mu."""
    kappa = params.kappa
    m = params.dim
    v = m / 2.0 - 1.0
    pos = kappa > 0
    k = torch.where(pos, kappa, torch.ones_like(kappa))
    log_iv = log_bessel_iv(v, k)
    ratio = torch.exp(log_bessel_iv(v + 1.0, k) - log_iv)
    log_c = v * torch.log(k) - (m / 2.0) * math.log(2 * math.pi) - log_iv
    log_area = math.log(2.0) + (m / 2.0) * math.log(math.pi) - math.lgamma(m / 2.0)
    kl = k * ratio + log_c + log_area
    return torch.where(pos, kl, torch.zeros_like(kl))


# --- Gaussian --------------------------------------------------------------

def gaussian_transform(params: GaussianParams, noise: torch.Tensor) -> torch.Tensor:
    return params.mu + params.sigma * noise


def gaussian_sample(params: GaussianParams, rng: np.random.Generator) -> torch.Tensor:
    noise = torch.as_tensor(rng.standard_normal(tuple(params.mu.shape)), dtype=params.mu.dtype)
    return gaussian_transform(params, noise)


def gaussian_kl_to_std(params: GaussianParams) -> torch.Tensor:
    """KL(N(mu, diag sigma^2) || N(0, I)), summed over the last axis."""
    var = params.sigma ** 2
    return 0.5 * (params.mu ** 2 + var - 1 - torch.log(var)).sum(-1)
