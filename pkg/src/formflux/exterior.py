"""Alternating k-covectors on R^n.

A covector of degree k is stored as coefficients over strictly increasing
multi-indices (the basis dx_{I_1} ^ ... ^ dx_{I_k}).  Evaluation on k vectors
sums coefficient times the determinant minor selected by the index.  The
module also provides the wedge product, the Euclidean coefficient norm and
the directional sphere norm

    |alpha|_{S,p}^p = int_{(S^{n-1})^k} |alpha(v_1,...,v_k)|^p dH(v_1)...dH(v_k)

computed by product quadrature (n = 2, 3) or Monte Carlo (any n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .estimates import Estimate

__all__ = [
    "MultiIndex",
    "Covector",
    "SphereNormConfig",
    "wedge",
    "euclidean_norm",
    "sphere_norm",
    "unit_sphere_area",
    "sphere_quadrature",
]


def _normalize_index(entries, n, k=None):
    """Validate a multi-index: strictly increasing ints in [1, n]."""
    idx = tuple(int(i) for i in entries)
    if k is not None and len(idx) != k:
        raise ArgumentError(f"multi-index {idx} has length {len(idx)}, expected {k}")
    for i in idx:
        if not 1 <= i <= n:
            raise ArgumentError(f"multi-index entry {i} out of range [1, {n}]")
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise ArgumentError(f"multi-index {idx} is not strictly increasing")
    return idx


@dataclass(frozen=True)
class MultiIndex:
    """A strictly increasing tuple of axis indices in {1, ..., n}."""

    entries: tuple
    dimension: int

    def __post_init__(self):
        object.__setattr__(
            self, "entries", _normalize_index(self.entries, self.dimension)
        )

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def sort_with_sign(entries):
    """Sort a tuple of indices, returning (sorted tuple, permutation sign).

    Returns sign 0 if any index repeats.
    """
    entries = list(entries)
    sign = 1
    # insertion sort, counting swaps; fine for the tiny k used here
    for i in range(1, len(entries)):
        j = i
        while j > 0 and entries[j - 1] > entries[j]:
            entries[j - 1], entries[j] = entries[j], entries[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(entries, entries[1:]):
        if a == b:
            return tuple(entries), 0
    return tuple(entries), sign


class Covector:
    """An alternating k-linear functional on R^n.

    coeffs maps sorted multi-index tuples (1-based) to floats.  Degree 0
    covectors are scalars stored under the empty index ().  Degrees above n
    are identically zero.
    """

    def __init__(self, dimension, degree, coeffs=None):
        if dimension < 1:
            raise ArgumentError("dimension must be >= 1")
        if degree < 0:
            raise ArgumentError("degree must be >= 0")
        self.dimension = int(dimension)
        self.degree = int(degree)
        clean = {}
        if coeffs and self.degree <= self.dimension:
            for idx, c in coeffs.items():
                if isinstance(idx, MultiIndex):
                    idx = idx.entries
                idx = _normalize_index(idx, self.dimension, self.degree)
                c = float(c)
                if c != 0.0:
                    clean[idx] = clean.get(idx, 0.0) + c
        self.coeffs = clean

    @classmethod
    def basis(cls, dimension, entries, coeff=1.0):
        """The basis covector dx_{i1} ^ ... ^ dx_{ik} scaled by coeff."""
        entries = tuple(entries)
        return cls(dimension, len(entries), {entries: coeff})

    @classmethod
    def zero(cls, dimension, degree):
        return cls(dimension, degree, {})

    def is_zero(self):
        return not self.coeffs

    def __add__(self, other):
        if (
            not isinstance(other, Covector)
            or other.dimension != self.dimension
            or other.degree != self.degree
        ):
            raise ArgumentError("can only add covectors of equal dimension and degree")
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            out[idx] = out.get(idx, 0.0) + c
        return Covector(self.dimension, self.degree, out)

    def __sub__(self, other):
        return self + (other * -1.0)

    def __mul__(self, scalar):
        scalar = float(scalar)
        return Covector(
            self.dimension,
            self.degree,
            {idx: c * scalar for idx, c in self.coeffs.items()},
        )

    __rmul__ = __mul__

    def __repr__(self):
        if not self.coeffs:
            return f"Covector({self.dimension}, {self.degree}, 0)"
        parts = []
        for idx in sorted(self.coeffs):
            name = "^".join(f"dx{i}" for i in idx) if idx else "1"
            parts.append(f"{self.coeffs[idx]:+g}*{name}")
        return f"Covector({self.dimension}, {self.degree}, {' '.join(parts)})"

    def evaluate(self, vectors):
        """Evaluate on k vectors in R^n (any array-like of shape (k, n))."""
        vs = np.asarray(vectors, dtype=float)
        if self.degree == 0:
            if len(vs) != 0:
                raise ArgumentError("degree-0 covector takes no vectors")
            return self.coeffs.get((), 0.0)
        if vs.shape != (self.degree, self.dimension):
            raise ArgumentError(
                f"expected {self.degree} vectors of dimension {self.dimension}, "
                f"got array of shape {vs.shape}"
            )
        return float(self.evaluate_batch(vs[np.newaxis])[0])

    def evaluate_batch(self, vs):
        """Evaluate on a batch of vector tuples, shape (N, k, n) -> (N,)."""
        vs = np.asarray(vs, dtype=float)
        n_batch = vs.shape[0]
        if self.degree == 0:
            return np.full(n_batch, self.coeffs.get((), 0.0))
        if vs.shape[1:] != (self.degree, self.dimension):
            raise ArgumentError(
                f"expected batch shape (N, {self.degree}, {self.dimension}), "
                f"got {vs.shape}"
            )
        out = np.zeros(n_batch)
        for idx, c in self.coeffs.items():
            cols = [i - 1 for i in idx]
            minors = vs[:, :, cols]
            out += c * _batch_det(minors)
        return out

    __call__ = evaluate


def _batch_det(m):
    """Determinants of a (N, k, k) stack, with closed forms for k <= 3."""
    k = m.shape[1]
    if k == 1:
        return m[:, 0, 0]
    if k == 2:
        return m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    if k == 3:
        return (
            m[:, 0, 0] * (m[:, 1, 1] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 1])
            - m[:, 0, 1] * (m[:, 1, 0] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 0])
            + m[:, 0, 2] * (m[:, 1, 0] * m[:, 2, 1] - m[:, 1, 1] * m[:, 2, 0])
        )
    return np.linalg.det(m)


def wedge(alpha: Covector, beta: Covector) -> Covector:
    """Wedge product of two covectors on the same R^n."""
    if alpha.dimension != beta.dimension:
        raise ArgumentError("wedge requires covectors on the same space")
    n = alpha.dimension
    degree = alpha.degree + beta.degree
    if degree > n:
        return Covector.zero(n, degree)
    out = {}
    for ia, ca in alpha.coeffs.items():
        for ib, cb in beta.coeffs.items():
            merged, sign = sort_with_sign(ia + ib)
            if sign == 0:
                continue
            out[merged] = out.get(merged, 0.0) + sign * ca * cb
    return Covector(n, degree, out)


def euclidean_norm(alpha: Covector) -> float:
    """sqrt of the sum of squared coefficients."""
    return math.sqrt(sum(c * c for c in alpha.coeffs.values()))


@dataclass(frozen=True)
class SphereNormConfig:
    """Configuration for sphere_norm.

    nodes_or_samples is the per-factor node count for product quadrature
    (per angle for n = 3) and the total sample count for Monte Carlo.
    """

    p: float = 2.0
    method: str = "product-quadrature"
    nodes_or_samples: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ArgumentError("p must be >= 1")
        if self.nodes_or_samples < 1:
            raise ArgumentError("nodes_or_samples must be >= 1")
        if self.method not in ("product-quadrature", "monte-carlo"):
            raise ArgumentError(f"unknown sphere-norm method {self.method!r}")


def unit_sphere_area(n):
    """Surface measure of S^{n-1} in R^n: 2 pi^{n/2} / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def sphere_quadrature(n, nodes):
    """Quadrature points and weights on S^{n-1}, weights summing to its area.

    n = 2: trapezoidal rule on [0, 2pi), spectrally accurate for smooth
    periodic integrands.  n = 3: product of Gauss-Legendre in cos(theta) and
    trapezoid in phi.  Other dimensions are not supported by quadrature; use
    the monte-carlo method instead.
    """
    if n == 1:
        pts = np.array([[1.0], [-1.0]])
        wts = np.array([1.0, 1.0])
        return pts, wts
    if n == 2:
        phi = 2.0 * math.pi * np.arange(nodes) / nodes
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        wts = np.full(nodes, 2.0 * math.pi / nodes)
        return pts, wts
    if n == 3:
        m_polar = nodes
        m_phi = 2 * nodes
        u, gl_w = np.polynomial.legendre.leggauss(m_polar)  # u = cos(theta)
        phi = 2.0 * math.pi * np.arange(m_phi) / m_phi
        su = np.sqrt(np.maximum(0.0, 1.0 - u**2))
        pts = np.empty((m_polar * m_phi, 3))
        wts = np.empty(m_polar * m_phi)
        idx = 0
        for i in range(m_polar):
            block = slice(idx, idx + m_phi)
            pts[block, 0] = su[i] * np.cos(phi)
            pts[block, 1] = su[i] * np.sin(phi)
            pts[block, 2] = u[i]
            wts[block] = gl_w[i] * (2.0 * math.pi / m_phi)
            idx += m_phi
        return pts, wts
    raise ArgumentError(
        f"product quadrature on S^{n - 1} is unsupported for n = {n}; "
        "use method='monte-carlo'"
    )


def _sphere_power_integral_quadrature(alpha, p, nodes, chunk=1 << 20):
    """Q = int |alpha(v_1..v_k)|^p over the product of spheres, by quadrature.

    The tensor grid has m^k combinations; they are enumerated in chunks to
    keep memory flat.
    """
    n, k = alpha.dimension, alpha.degree
    pts, wts = sphere_quadrature(n, nodes)
    m = len(pts)
    total = m**k
    acc = 0.0
    for lo in range(0, total, chunk):
        hi = min(lo + chunk, total)
        combo = np.stack(
            np.unravel_index(np.arange(lo, hi), (m,) * k), axis=1
        )  # (hi-lo, k)
        vs = pts[combo]  # (hi-lo, k, n)
        vals = np.abs(alpha.evaluate_batch(vs)) ** p
        w = np.prod(wts[combo], axis=1)
        acc += float(np.sum(w * vals))
    return acc


def sphere_norm(alpha: Covector, cfg: SphereNormConfig = SphereNormConfig()) -> Estimate:
    """The sphere norm |alpha|_{S,p} with a conservative error estimate.

    Degree 0 is the scalar absolute value (empty product of sphere
    integrals).  Degree n reduces by homogeneity to the single top
    coefficient times the sphere norm of the unit top covector, which is
    computed (and cached), not assumed.
    """
    n, k, p = alpha.dimension, alpha.degree, cfg.p
    if k == 0:
        return Estimate(abs(alpha.coeffs.get((), 0.0)), 0.0)
    if k > n or alpha.is_zero():
        return Estimate(0.0, 0.0)
    if k == n:
        top = tuple(range(1, n + 1))
        c = alpha.coeffs.get(top, 0.0)
        unit = _unit_top_norm(n, cfg)
        return Estimate(abs(c) * unit.value, abs(c) * unit.error)

    if cfg.method == "product-quadrature":
        q_full = _sphere_power_integral_quadrature(alpha, p, cfg.nodes_or_samples)
        q_half = _sphere_power_integral_quadrature(
            alpha, p, max(2, cfg.nodes_or_samples // 2)
        )
        q_err = abs(q_full - q_half)
        if p != 2.0 * round(p / 2.0):
            # |.|^p has a kink at zeros for non-even p
            q_err *= 10.0
        q = q_full
        n_eff = None
    else:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        n_samples = cfg.nodes_or_samples
        g = rng.standard_normal((n_samples, k, n))
        g /= np.linalg.norm(g, axis=2, keepdims=True)
        vals = np.abs(alpha.evaluate_batch(g)) ** p
        area = unit_sphere_area(n) ** k
        q = area * float(np.mean(vals))
        q_err = area * float(np.std(vals, ddof=1)) / math.sqrt(n_samples)
        n_eff = n_samples

    if q <= 0.0:
        return Estimate(0.0, q_err ** (1.0 / p) if q_err > 0 else 0.0)
    value = q ** (1.0 / p)
    # delta method: d(q^{1/p})/dq = q^{1/p - 1} / p
    err = q_err * value / (p * q)
    return Estimate(value, err)


_TOP_NORM_CACHE = {}


def _unit_top_norm(n, cfg):
    key = (n, cfg.p, cfg.method, cfg.nodes_or_samples, cfg.seed)
    if key not in _TOP_NORM_CACHE:
        unit = Covector.basis(n, tuple(range(1, n + 1)))
        if cfg.method == "product-quadrature" and n > 3:
            raise ArgumentError(
                f"product quadrature unsupported for n = {n}; use monte-carlo"
            )
        q = (
            _sphere_power_integral_quadrature(unit, cfg.p, cfg.nodes_or_samples)
            if cfg.method == "product-quadrature"
            else None
        )
        if q is None:
            rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
            g = rng.standard_normal((cfg.nodes_or_samples, n, n))
            g /= np.linalg.norm(g, axis=2, keepdims=True)
            vals = np.abs(unit.evaluate_batch(g)) ** cfg.p
            area = unit_sphere_area(n) ** n
            q = area * float(np.mean(vals))
            q_err = area * float(np.std(vals, ddof=1)) / math.sqrt(len(vals))
        else:
            q_half = _sphere_power_integral_quadrature(
                unit, cfg.p, max(2, cfg.nodes_or_samples // 2)
            )
            q_err = abs(q - q_half)
            if cfg.p != 2.0 * round(cfg.p / 2.0):
                q_err *= 10.0
        value = q ** (1.0 / cfg.p)
        err = q_err * value / (cfg.p * q) if q > 0 else 0.0
        _TOP_NORM_CACHE[key] = Estimate(value, err)
    return _TOP_NORM_CACHE[key]
