"""Sphere and ball quadrature rules plus seeded Monte-Carlo sampling.

Deterministic by construction: node layouts are closed-form, and the
Monte-Carlo streams are derived from a (seed, tag) pair so that concurrent
callers get reproducible, independent streams.
"""

from __future__ import annotations

import zlib

import numpy as np

from .kernels import sphere_surface_area, unit_ball_volume

# default node counts; see the module docstrings of measures/green for
# which rule is used where
CIRCLE_NODES = 4096          # 2**12, periodic trapezoid on circles
SPHERE_PRODUCT_NODES = 4096  # 2**12 total for the d=3 product rule
SPHERE_MC_SAMPLES = 65536    # 2**16, plain uniform layers in d=3
BALL_RADIAL_NODES = 32


def rng_for(seed: int, tag: str) -> np.random.Generator:
    """Deterministic generator for a (global seed, stream tag) pair."""
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF,
                                                         zlib.crc32(tag.encode())]))


def circle_nodes(n: int) -> np.ndarray:
    """n equally spaced unit vectors on the circle (periodic trapezoid nodes)."""
    theta = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(theta), np.sin(theta)])


def sphere_spiral_nodes(n: int) -> np.ndarray:
    """Fibonacci spiral layout on the unit 2-sphere; near-uniform, deterministic."""
    i = np.arange(n)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    z = 1.0 - 2.0 * (i + 0.5) / n
    rho = np.sqrt(1.0 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def sphere_rule(d: int, n: int | None = None):
    """Nodes and weights for the mean over the unit sphere (weights sum to 1).

    d=2: periodic trapezoid.  d=3: Gauss-Legendre in cos(theta) crossed with
    trapezoid in the azimuth, spectrally accurate for smooth integrands.
    """
    if d == 2:
        n = CIRCLE_NODES if n is None else n
        return circle_nodes(n), np.full(n, 1.0 / n)
    if d == 3:
        n = SPHERE_PRODUCT_NODES if n is None else n
        m = max(4, int(np.sqrt(n)))
        z, wz = np.polynomial.legendre.leggauss(m)
        phi = 2.0 * np.pi * np.arange(m) / m
        zz = np.repeat(z, m)
        ww = np.repeat(wz, m) / (2.0 * m)
        pp = np.tile(phi, m)
        rho = np.sqrt(1.0 - zz * zz)
        nodes = np.column_stack([rho * np.cos(pp), rho * np.sin(pp), zz])
        return nodes, ww
    raise NotImplementedError(f"sphere rule for d={d}")


def sphere_mc_nodes(d: int, n: int, seed: int, tag: str) -> np.ndarray:
    """Seeded uniform samples on the unit sphere."""
    rng = rng_for(seed, tag)
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def ball_rule(d: int, n_radial: int | None = None, n_angular: int | None = None):
    """Nodes and weights for the mean over the unit ball (weights sum to 1).

    Product rule: Gauss-Legendre in the radius against the r^(d-1) Jacobian,
    crossed with the sphere rule of matching dimension.
    """
    n_radial = BALL_RADIAL_NODES if n_radial is None else n_radial
    t, wt = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * (t + 1.0)  # map [-1,1] -> [0,1]
    wr = 0.5 * wt * d * r ** (d - 1)  # mean over ball: d * r^(d-1) dr
    if d == 2:
        n_angular = 256 if n_angular is None else n_angular
    else:
        n_angular = 1024 if n_angular is None else n_angular
    s_nodes, s_w = sphere_rule(d, n_angular)
    nodes = (r[:, None, None] * s_nodes[None, :, :]).reshape(-1, d)
    weights = (wr[:, None] * s_w[None, :]).ravel()
    return nodes, weights


def gauss_legendre_cell(ndim: int, order: int = 3):
    """Tensor Gauss-Legendre nodes/weights on the unit cell [-1/2, 1/2]^ndim."""
    t, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * t
    w = 0.5 * w
    grids = np.meshgrid(*([t] * ndim), indexing="ij")
    nodes = np.column_stack([g.ravel() for g in grids])
    weights = np.ones(nodes.shape[0])
    for axis in range(ndim):
        idx = np.meshgrid(*([np.arange(order)] * ndim), indexing="ij")[axis].ravel()
        weights *= w[idx]
    return nodes, weights


def surface_area(d: int) -> float:
    return sphere_surface_area(d)


def ball_volume(d: int) -> float:
    return unit_ball_volume(d)
