"""Independent oracles: Haar samplers, Monte Carlo, sphere moments and quadrature.

Samples are returned in the flat real layout of :class:`CoordLayout`
(index ``c*beta*n + l*n + r``).  Monte Carlo runs in fixed-size blocks, each
with its own Philox stream derived from ``(seed, block)``, so results do not
depend on the number of threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .algebra import ONE, Polynomial, Rational, rational
from .pizzetti import StiefelSpec, poch

DEFAULT_BLOCK = 8192


# ------------------------------------------------------------------ sampling


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), block])))


def _qr_haar(z: np.ndarray) -> np.ndarray:
    """Batched QR with the R-diagonal phase moved into Q (Haar, not just invariant)."""
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    return q * phase[..., None, :]


def _quat_gram_schmidt(p: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormalize quaternion columns ``p + q j`` (shape (B, n, k)) in place order.

    Inner product ``<x, y> = s + t j`` with
    ``s = sum conj(px) py + qx conj(qy)``, ``t = sum conj(px) qy - qx conj(py)``;
    projection ``y -= x (s + t j)`` using ``(p + q j)(s + t j) = (p s - q conj t) + (p t + q conj s) j``.
    Two passes keep the orthogonality residual at rounding level.
    """
    p = p.copy()
    q = q.copy()
    k = p.shape[-1]
    for c in range(k):
        for _ in range(2):
            for d in range(c):
                px, qx = p[..., d], q[..., d]
                py, qy = p[..., c], q[..., c]
                s = np.sum(np.conj(px) * py + qx * np.conj(qy), axis=-1)[..., None]
                t = np.sum(np.conj(px) * qy - qx * np.conj(py), axis=-1)[..., None]
                p[..., c] = py - (px * s - qx * np.conj(t))
                q[..., c] = qy - (px * t + qx * np.conj(s))
        norm = np.sqrt(np.sum(np.abs(p[..., c]) ** 2 + np.abs(q[..., c]) ** 2, axis=-1))[..., None]
        p[..., c] /= norm
        q[..., c] /= norm
    return p, q


def sample_stiefel_batch(spec: StiefelSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent Haar points of St^(beta)(n, n-k), shape (size, beta*n*k)."""
    n, k = spec.n, spec.k
    if spec.beta == 1:
        q = _qr_haar(rng.standard_normal((size, n, k)))
        comps = q[:, None, :, :]
    elif spec.beta == 2:
        z = (rng.standard_normal((size, n, k)) + 1j * rng.standard_normal((size, n, k))) / math.sqrt(2)
        q = _qr_haar(z)
        comps = np.stack([q.real, q.imag], axis=1)
    else:
        g = rng.standard_normal((4, size, n, k))
        p, q = _quat_gram_schmidt(g[0] + 1j * g[1], g[2] + 1j * g[3])
        comps = np.stack([p.real, p.imag, q.real, q.imag], axis=1)
    # comps: (size, beta, n, k) -> (size, k, beta, n)
    return np.ascontiguousarray(np.transpose(comps, (0, 3, 1, 2))).reshape(size, -1)


def sample_stiefel(spec: StiefelSpec, rng: np.random.Generator) -> np.ndarray:
    """One Haar point as a flat real vector."""
    return sample_stiefel_batch(spec, rng, 1)[0]


def to_complex_matrix(spec: StiefelSpec, x: np.ndarray) -> np.ndarray:
    """Complex representation: n x k (beta <= 2) or the 2n x 2k block ``[[P, Q], [-conj Q, conj P]]``."""
    x = np.asarray(x, dtype=float)
    a = x.reshape(x.shape[:-1] + (spec.k, spec.beta, spec.n))
    a = np.moveaxis(a, -3, -1)  # (..., beta, n, k)
    if spec.beta == 1:
        return a[..., 0, :, :].astype(complex)
    if spec.beta == 2:
        return a[..., 0, :, :] + 1j * a[..., 1, :, :]
    p = a[..., 0, :, :] + 1j * a[..., 1, :, :]
    q = a[..., 2, :, :] + 1j * a[..., 3, :, :]
    top = np.concatenate([p, q], axis=-1)
    bottom = np.concatenate([-np.conj(q), np.conj(p)], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def orthonormality_residual(spec: StiefelSpec, x: np.ndarray) -> np.ndarray:
    """``max |A^dagger A - 1|`` per sample."""
    a = to_complex_matrix(spec, x)
    g = np.conj(np.swapaxes(a, -1, -2)) @ a
    eye = np.eye(g.shape[-1])
    return np.max(np.abs(g - eye), axis=(-2, -1))


def quaternion_structure_residual(spec: StiefelSpec, x: np.ndarray) -> np.ndarray:
    """``max |conj A - tau_n A tau_k|`` per sample, with ``tau = [[0, 1], [-1, 0]]``."""
    if spec.beta != 4:
        raise ValueError("quaternion structure only applies to beta = 4")
    a = to_complex_matrix(spec, x)

    def tau(s):
        z = np.zeros((2 * s, 2 * s))
        z[:s, s:] = np.eye(s)
        z[s:, :s] = -np.eye(s)
        return z

    diff = np.conj(a) - tau(spec.n) @ a @ tau(spec.k).T
    return np.max(np.abs(diff), axis=(-2, -1))


# ---------------------------------------------------------- batched eval


class CompiledPolynomial:
    """Vectorized float evaluation of a real polynomial on a batch of points."""

    def __init__(self, f: Polynomial):
        if not f.is_real():
            raise ValueError("Monte Carlo evaluation needs real coefficients")
        self.dim = f.layout.dim
        self.terms = [(float(c.re), m) for m, c in f.sorted_terms()]
        self.powers = sorted({(i, e) for _, m in self.terms for i, e in m})

    def __call__(self, x: np.ndarray) -> np.ndarray:
        cache = {}
        for i, e in self.powers:
            cache[(i, e)] = x[:, i] ** e if e > 1 else x[:, i]
        out = np.zeros(x.shape[0])
        for c, m in self.terms:
            t = np.full(x.shape[0], c)
            for ie in m:
                t = t * cache[ie]
            out += t
        return out


# ------------------------------------------------------------ Monte Carlo


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples, "seed": self.seed}


def _merge(a: tuple[int, float, float], b: tuple[int, float, float]) -> tuple[int, float, float]:
    """Chan et al. pairwise merge of (count, mean, M2)."""
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    if n == 0:
        return a
    delta = mb - ma
    mean = ma + delta * nb / n
    return n, mean, sa + sb + delta * delta * na * nb / n


def default_threads() -> int:
    env = os.environ.get("HAARINT_THREADS")
    if env:
        return max(1, int(env))
    return 1


Integrand = Polynomial | Callable[[np.ndarray], np.ndarray]


def _as_callable(f: Integrand) -> Callable[[np.ndarray], np.ndarray]:
    return CompiledPolynomial(f) if isinstance(f, Polynomial) else f


def mc_integrate_many(
    spec: StiefelSpec,
    fs: Sequence[Integrand],
    samples: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK,
    threads: int | None = None,
) -> list[McEstimate]:
    """Estimate several integrals on one shared stream of Haar samples."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    for f in fs:
        if isinstance(f, Polynomial) and f.layout != spec.layout:
            raise ValueError(f"layout mismatch: {f.layout} vs {spec.layout}")
    funcs = [_as_callable(f) for f in fs]
    n_blocks = -(-samples // block_size)

    def run_block(b: int):
        size = min(block_size, samples - b * block_size)
        x = sample_stiefel_batch(spec, block_rng(seed, b), size)
        stats = []
        for g in funcs:
            v = np.asarray(g(x), dtype=float)
            mean = float(np.mean(v))
            stats.append((size, mean, float(np.sum((v - mean) ** 2))))
        return stats

    threads = threads or default_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_block = list(pool.map(run_block, range(n_blocks)))
    else:
        per_block = [run_block(b) for b in range(n_blocks)]
    out = []
    for i in range(len(funcs)):
        acc = (0, 0.0, 0.0)
        for stats in per_block:
            acc = _merge(acc, stats[i])
        n, mean, m2 = acc
        var = m2 / (n - 1) if n > 1 else 0.0
        out.append(McEstimate(mean, math.sqrt(max(var, 0.0) / n), n, seed))
    return out


def mc_integrate(
    spec: StiefelSpec,
    f: Integrand,
    samples: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK,
    threads: int | None = None,
) -> McEstimate:
    """Monte Carlo estimate of the normalized Haar integral of ``f``."""
    return mc_integrate_many(spec, [f], samples, seed, block_size, threads)[0]


# --------------------------------------------------------- closed forms


def sphere_monomial_moment(N: int, exponents: Sequence[int]) -> Rational:
    """Average of ``prod x_i^a_i`` over S^(N-1), from the Beta-function formula.

    With ``a_i = 2 b_i`` the Gamma ratios collapse to
    ``prod (1/2)_(b_i) / (N/2)_(sum b_i)``.
    """
    if len(exponents) > N:
        raise ValueError(f"{len(exponents)} exponents for a sphere in R^{N}")
    if any(a < 0 for a in exponents):
        raise ValueError("negative exponent")
    if any(a % 2 for a in exponents):
        return rational(0)
    half = rational(1) / 2
    num = ONE
    for a in exponents:
        num *= poch(half, a // 2)
    return num / poch(rational(N) / 2, sum(exponents) // 2)


# ------------------------------------------------------------ quadrature


def _gl(nodes: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _rz(t):
    c, s = np.cos(t), np.sin(t)
    z, o = np.zeros_like(t), np.ones_like(t)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)


def _ry(t):
    c, s = np.cos(t), np.sin(t)
    z, o = np.zeros_like(t), np.ones_like(t)
    return np.stack([np.stack([c, z, s], -1), np.stack([z, o, z], -1), np.stack([-s, z, c], -1)], -2)


LOW_DIM_SPECS = {(1, 2, 2), (1, 3, 1), (1, 3, 2), (1, 3, 3), (2, 1, 1)}


def low_dim_quadrature(spec: StiefelSpec, f: Integrand, nodes: int = 64) -> float:
    """Gauss-Legendre product rule over angle parametrizations of SO(2), SO(3) and U(1)."""
    key = (spec.beta, spec.n, spec.k)
    if key not in LOW_DIM_SPECS:
        raise ValueError(f"no quadrature rule for beta={spec.beta}, n={spec.n}, k={spec.k}")
    g = _as_callable(f)
    if key == (1, 2, 2):
        t, w = _gl(nodes, 0.0, 2 * math.pi)
        c, s = np.cos(t), np.sin(t)
        x = np.stack([c, s, -s, c], axis=1)  # u = (cos, sin), v = (-sin, cos)
        return float(np.dot(w, g(x)) / (2 * math.pi))
    if key == (2, 1, 1):
        t, w = _gl(nodes, 0.0, 2 * math.pi)
        x = np.stack([np.cos(t), np.sin(t)], axis=1)
        return float(np.dot(w, g(x)) / (2 * math.pi))
    a, wa = _gl(nodes, 0.0, 2 * math.pi)
    b, wb = _gl(nodes, 0.0, math.pi)
    c, wc = _gl(nodes, 0.0, 2 * math.pi)
    A, B, C = np.meshgrid(a, b, c, indexing="ij")
    W = (wa[:, None, None] * (wb * np.sin(b))[None, :, None] * wc[None, None, :]).ravel()
    R = _rz(A.ravel()) @ _ry(B.ravel()) @ _rz(C.ravel())
    x = np.ascontiguousarray(np.transpose(R[:, :, : spec.k], (0, 2, 1))).reshape(len(W), -1)
    return float(np.dot(W, g(x)) / (8 * math.pi**2))

