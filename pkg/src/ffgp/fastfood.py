"""Structured random projections: build and apply S H G Pi H B stacks.

Each block expands a zero-padded input x in R^{d_pad} into d_pad projections

    xi = d_pad^{-1/2} * S H G Pi H B x

where B is a random sign diagonal, H the unnormalized Walsh-Hadamard matrix,
Pi a uniform random permutation, G a diagonal of standard normal draws and
S a diagonal of sampled radii divided by ||G||_F.  Rows of H G Pi H B all have
norm sqrt(d_pad) * ||G||_F, so after the two rescalings the i-th projection
direction has Euclidean norm equal to the i-th sampled radius: the stack
realizes an isotropic spectral sample with exactly controlled row lengths in
O(d_pad log d_pad) time per block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaincinv

from .errors import DimensionError, DomainError
from .hadamard import PadGeometry, fwht_inplace

RadialSampler = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FastfoodStack:
    """Frozen draws for one feature group (all blocks concatenated).

    b_diag, g_diag, s_radii are flat arrays of length geometry.m_total laid
    out block by block; perms has one permutation row per block.  s_radii
    holds the raw S diagonal (sampled radius / per-block ||G||_F), so the
    effective frequency radius of row i is s_radii[i] * ||G_block||_F =
    the sampled radius.  uniform_draws keeps the quantile inputs so radial
    re-parameterizations can recompute radii without re-sampling.
    """

    geometry: PadGeometry
    seed: object
    b_diag: np.ndarray
    g_diag: np.ndarray
    perms: np.ndarray
    s_radii: np.ndarray
    g_frob_norms: np.ndarray
    uniform_draws: np.ndarray

    @property
    def radii(self) -> np.ndarray:
        """Sampled frequency radii per row (s_radii undone by ||G||_F)."""
        d = self.geometry.d_pad
        return self.s_radii * np.repeat(self.g_frob_norms, d)


def sample_chi_radii(u: np.ndarray, d_pad: int) -> np.ndarray:
    """Inverse-CDF chi(d_pad) radii at quantiles u in (0, 1).

    r = sqrt(2 * gammaincinv(d_pad / 2, u)); the chi distribution is the
    length of a d_pad-dimensional standard normal vector.
    """
    u = np.asarray(u, dtype=float)
    if d_pad < 1:
        raise DimensionError(f"need d_pad >= 1, got {d_pad}")
    if u.size and (np.min(u) <= 0.0 or np.max(u) >= 1.0):
        raise DomainError("chi quantiles must lie strictly inside (0, 1)")
    return np.sqrt(2.0 * gammaincinv(d_pad / 2.0, u))


def build_stack(
    seed,
    geometry: PadGeometry,
    radial_sampler: RadialSampler,
    systematic: bool = False,
) -> FastfoodStack:
    """Draw all per-block matrices for one group.

    seed may be an int or a tuple of ints (fed to numpy's SeedSequence), so a
    master seed plus group index reproduces the stack exactly.  With
    systematic=True the radial quantiles are a jittered uniform grid
    i/m + jitter, jitter ~ U[0, 1/m), instead of iid uniforms.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    d = geometry.d_pad
    nb = geometry.blocks
    m = geometry.m_total

    b_diag = rng.choice(np.array([-1.0, 1.0]), size=m)
    g_diag = rng.standard_normal(m)
    perms = np.stack([rng.permutation(d) for _ in range(nb)])

    if systematic:
        jitter = rng.uniform(0.0, 1.0 / m)
        u = (np.arange(m) + 0.0) / m + jitter
    else:
        u = rng.random(m)
        # rng.random can return exactly 0; nudge into the open interval
        u[u == 0.0] = np.finfo(float).tiny
    radii = np.asarray(radial_sampler(u), dtype=float)
    if radii.shape != (m,):
        raise DimensionError(f"radial sampler returned shape {radii.shape}, want ({m},)")

    g_blocks = g_diag.reshape(nb, d)
    g_frob = np.sqrt(np.sum(g_blocks**2, axis=1))
    if np.any(g_frob == 0.0):
        # probability zero, but s_radii would be undefined
        raise DomainError("degenerate G block with zero Frobenius norm")
    s_radii = radii / np.repeat(g_frob, d)

    return FastfoodStack(
        geometry=geometry,
        seed=seed,
        b_diag=b_diag,
        g_diag=g_diag,
        perms=perms,
        s_radii=s_radii,
        g_frob_norms=g_frob,
        uniform_draws=u,
    )


def _pad(x: np.ndarray, geometry: PadGeometry) -> np.ndarray:
    """Zero-pad rows of (n, d_in) to (n, d_pad)."""
    n = x.shape[0]
    out = np.zeros((n, geometry.d_pad))
    out[:, : geometry.d_in] = x
    return out


def project(
    stack: FastfoodStack,
    x: np.ndarray,
    s_diag: np.ndarray | None = None,
    g_diag: np.ndarray | None = None,
    b_diag: np.ndarray | None = None,
) -> np.ndarray:
    """Apply the stack to rows of x: (n, d_in) -> (n, m_total).

    s_diag / g_diag / b_diag override the stored diagonals (same flat layout),
    which is how learned-scaling kernels re-use one frozen stack.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimensionError(f"expected 2-d input, got shape {x.shape}")
    geo = stack.geometry
    if x.shape[1] != geo.d_in:
        raise DimensionError(f"input has {x.shape[1]} columns, stack expects {geo.d_in}")
    d = geo.d_pad
    s_all = stack.s_radii if s_diag is None else np.asarray(s_diag, dtype=float)
    g_all = stack.g_diag if g_diag is None else np.asarray(g_diag, dtype=float)
    b_all = stack.b_diag if b_diag is None else np.asarray(b_diag, dtype=float)

    xp = _pad(x, geo)
    out = np.empty((x.shape[0], geo.m_total))
    scale = 1.0 / np.sqrt(d)
    for blk in range(geo.blocks):
        lo = blk * d
        v = xp * b_all[lo : lo + d]
        fwht_inplace(v)
        v = np.ascontiguousarray(v[:, stack.perms[blk]])
        v *= g_all[lo : lo + d]
        fwht_inplace(v)
        v *= s_all[lo : lo + d] * scale
        out[:, lo : lo + d] = v
    return out


def project_transpose(
    stack: FastfoodStack,
    t: np.ndarray,
    s_diag: np.ndarray | None = None,
    g_diag: np.ndarray | None = None,
    b_diag: np.ndarray | None = None,
    skip_b: bool = False,
) -> np.ndarray:
    """Adjoint of `project` summed over blocks: (n, m_total) -> (n, d_pad).

    Computes t @ A where A is the stacked projection matrix (m_total, d_pad);
    equivalently applies each block transpose B H Pi^T G H S / sqrt(d_pad)
    and accumulates.  skip_b leaves out the final sign diagonal (needed for
    derivatives with respect to B itself).
    """
    t = np.asarray(t, dtype=float)
    geo = stack.geometry
    d = geo.d_pad
    if t.ndim != 2 or t.shape[1] != geo.m_total:
        raise DimensionError(f"expected (n, {geo.m_total}) array, got {t.shape}")
    s_all = stack.s_radii if s_diag is None else np.asarray(s_diag, dtype=float)
    g_all = stack.g_diag if g_diag is None else np.asarray(g_diag, dtype=float)
    b_all = stack.b_diag if b_diag is None else np.asarray(b_diag, dtype=float)

    acc = np.zeros((t.shape[0], d))
    scale = 1.0 / np.sqrt(d)
    for blk in range(geo.blocks):
        lo = blk * d
        v = t[:, lo : lo + d] * (s_all[lo : lo + d] * scale)
        v = np.ascontiguousarray(v)
        fwht_inplace(v)
        v *= g_all[lo : lo + d]
        # (Pi w)_i = w[perm[i]]  =>  (Pi^T u)[perm[i]] = u_i
        w = np.empty_like(v)
        w[:, stack.perms[blk]] = v
        fwht_inplace(w)
        if not skip_b:
            w *= b_all[lo : lo + d]
        acc += w
    return acc


def apply_stack(stack: FastfoodStack, x: np.ndarray) -> np.ndarray:
    """Projections xi for a single input vector (d_in,) -> (m_total,).

    Matrix input (n, d_in) is expanded row-wise to (n, m_total).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return project(stack, x[None, :])[0]
    return project(stack, x)
