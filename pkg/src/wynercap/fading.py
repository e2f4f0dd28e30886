"""Stationary fading coefficient streams.

A cell ``j`` is heard by base stations ``j-d, .., j``.  Its coefficients
are stored as a ``(d+1, K)`` complex array ``Z[j]`` indexed by *offset*
``s = j - i``, so ``Z[j][s]`` is the row vector ``zeta_{j-s, j}``.  Offset 0
is the cell's own base station and offset ``d`` the farthest one.

Cells are generated in fixed-size blocks, each block from its own
``SeedSequence(seed, spawn_key=(replica, block))``.  Cell ``s`` of replica
``r`` is therefore a pure function of ``(model, seed, r, s)``, whichever
order or chunking is used to request it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import digamma

from .errors import ModelError

EULER_GAMMA = float(np.euler_gamma)
BLOCK_CELLS = 256

KINDS = ("rayleigh", "correlated_rayleigh", "uniform_ring", "constant", "artificial")
PSEUDO_LAWS = ("rayleigh", "unit_phase", "constant", "uniform_ring")


@dataclass(frozen=True)
class FadingModel:
    """Law of the per-cell coefficient vectors.

    Use the module-level constructors (:func:`rayleigh`, :func:`constant`,
    ...) rather than instantiating this directly; they validate the
    moment and frontier hypotheses.

    Attributes
    ----------
    kind : str
        One of :data:`KINDS`.
    d : int
        Interference span.
    K : int
        Users per cell.
    scales : tuple of float
        Amplitude per offset ``0..d``.  For ``artificial`` these are the
        deterministic gains ``alpha_s``.
    correlation : float
        Correlation of the real (and imaginary) parts of offsets 0 and 1
        (``correlated_rayleigh`` only).
    epsilon : float
        Spread parameter of ``uniform_ring`` (model or pseudo-fading law).
    values : tuple
        Constant coefficients, nested ``(d+1) x K`` (``constant`` only).
    pseudo : str or None
        Pseudo-fading law for ``artificial``.
    """

    kind: str
    d: int
    K: int = 1
    scales: tuple = ()
    correlation: float = 0.0
    epsilon: float = 0.0
    values: tuple = ()
    pseudo: str | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown fading kind {self.kind!r}")
        if self.d < 1 or self.K < 1:
            raise ModelError(f"need d >= 1 and K >= 1, got d={self.d}, K={self.K}")
        if self.kind != "constant" and len(self.scales) != self.d + 1:
            raise ModelError(f"expected {self.d + 1} scales, got {len(self.scales)}")
        _check_hypotheses(self)

    @property
    def is_random(self) -> bool:
        if self.kind == "constant":
            return False
        if self.kind == "uniform_ring":
            return self.epsilon > 0
        if self.kind == "artificial":
            return self.pseudo != "constant" and not (
                self.pseudo == "uniform_ring" and self.epsilon == 0
            )
        return True

    def constant_cell(self) -> np.ndarray:
        """The single cell value of a deterministic model."""
        if self.kind == "constant":
            return np.array(self.values, dtype=complex).reshape(self.d + 1, self.K)
        if self.is_random:
            raise ModelError(f"model {self.kind!r} is random")
        return self.sample(np.random.default_rng(0), 1)[0]

    def with_scales(self, scales: Sequence[float]) -> "FadingModel":
        return replace(self, scales=tuple(float(s) for s in scales))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. cells, shape ``(n, d+1, K)``."""
        d, K = self.d, self.K
        shape = (n, d + 1, K)
        if self.kind == "constant":
            return np.broadcast_to(self.constant_cell(), shape).copy()
        scales = np.asarray(self.scales, dtype=float)[None, :, None]
        if self.kind == "rayleigh":
            return scales * _cn(rng, shape)
        if self.kind == "correlated_rayleigh":
            z0 = _cn(rng, (n, K))
            w = _cn(rng, (n, K))
            c = self.correlation
            z1 = c * z0 + np.sqrt(1.0 - c * c) * w
            return scales * np.stack([z0, z1], axis=1)
        if self.kind == "uniform_ring":
            return scales * _ring(rng, shape, self.epsilon)
        # artificial: every offset of cell j shares the pseudo-random P_j
        P = _pseudo(rng, (n, K), self.pseudo, self.epsilon)
        return scales * P[:, None, :]

    def describe(self) -> str:
        return self.name or self.kind


def _cn(rng, shape) -> np.ndarray:
    # unit-power circular complex Gaussian: Re, Im ~ N(0, 1/2)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def _ring(rng, shape, eps) -> np.ndarray:
    r = rng.uniform(1.0 - eps, 1.0 + eps, size=shape)
    theta = rng.uniform(0.0, 2.0 * eps * np.pi, size=shape)
    return r * np.exp(1j * theta)


def _pseudo(rng, shape, law, eps) -> np.ndarray:
    K = shape[-1]
    if law == "rayleigh":
        return _cn(rng, shape) / np.sqrt(K)
    if law == "unit_phase":
        return np.exp(2j * np.pi * rng.uniform(size=shape)) / np.sqrt(K)
    if law == "constant":
        return np.full(shape, 1.0 / np.sqrt(K), dtype=complex)
    if law == "uniform_ring":
        # rescaled so that E ||P||^2 = 1
        return _ring(rng, shape, eps) / np.sqrt(K * (1.0 + eps * eps / 3.0))
    raise ModelError(f"unknown pseudo-fading law {law!r}")


def _check_hypotheses(model: FadingModel) -> None:
    d = model.d
    if model.kind == "constant":
        vals = np.array(model.values, dtype=complex)
        if vals.size != (d + 1) * model.K:
            raise ModelError(f"constant model needs {(d + 1) * model.K} values, got {vals.size}")
        vals = vals.reshape(d + 1, model.K)
        if not np.all(np.isfinite(vals)):
            raise ModelError("constant values must be finite")
        if np.vdot(vals[0], vals[d]) == 0:
            raise ModelError("constant model has zeta_0 zeta_d^dagger = 0 (frontier hypothesis)")
        return
    scales = np.asarray(model.scales, dtype=float)
    if np.any(scales < 0) or not np.all(np.isfinite(scales)):
        raise ModelError("scales must be finite and non-negative")
    if scales[0] == 0 or scales[d] == 0:
        raise ModelError("offsets 0 and d need nonzero scale (frontier hypothesis)")
    if model.kind == "correlated_rayleigh":
        if d != 1:
            raise ModelError("correlated_rayleigh is defined for d = 1 only")
        if not -1.0 <= model.correlation <= 1.0:
            raise ModelError("correlation must lie in [-1, 1]")
    if model.kind == "uniform_ring" and not 0.0 <= model.epsilon <= 1.0:
        raise ModelError("epsilon must lie in [0, 1]")
    if model.kind == "artificial":
        if model.pseudo not in PSEUDO_LAWS:
            raise ModelError(f"pseudo law must be one of {PSEUDO_LAWS}")
        if np.any(scales == 0):
            raise ModelError("artificial fading gains must be positive")
        if model.pseudo == "uniform_ring" and not 0.0 <= model.epsilon < 1.0:
            raise ModelError("pseudo ring needs 0 <= epsilon < 1 (coordinates nonzero a.s.)")


# -- constructors -----------------------------------------------------------

def rayleigh(d: int, K: int = 1, scales: Sequence[float] | None = None, name: str = "") -> FadingModel:
    """Independent Rayleigh coefficients, optionally scaled per offset."""
    scales = (1.0,) * (d + 1) if scales is None else tuple(float(s) for s in scales)
    return FadingModel("rayleigh", d, K, scales=scales, name=name or "rayleigh")


def correlated_rayleigh(c: float, K: int = 1, scale: float = 1.0) -> FadingModel:
    """``d = 1`` Rayleigh with correlation ``c`` between the two offsets.

    Offset 1 (the neighbouring base station) is additionally scaled by
    ``scale``.
    """
    return FadingModel("correlated_rayleigh", 1, K, scales=(1.0, float(scale)),
                       correlation=float(c), name=f"correlated_rayleigh(c={c})")


def uniform_ring(d: int, epsilon: float, K: int = 1, scales: Sequence[float] | None = None) -> FadingModel:
    """Modulus uniform on ``[1-eps, 1+eps]``, phase uniform on ``[0, 2 eps pi]``."""
    scales = (1.0,) * (d + 1) if scales is None else tuple(float(s) for s in scales)
    return FadingModel("uniform_ring", d, K, scales=scales, epsilon=float(epsilon),
                       name=f"uniform_ring(eps={epsilon})")


def constant(values, K: int = 1) -> FadingModel:
    """Non-fading channel; ``values[s]`` is the coefficient at offset ``s``.

    Scalars are broadcast over the ``K`` users of a cell.
    """
    vals = np.asarray(values, dtype=complex)
    if vals.ndim == 1:
        vals = np.repeat(vals[:, None], K, axis=1)
    d = vals.shape[0] - 1
    return FadingModel("constant", d, vals.shape[1],
                       values=tuple(tuple(complex(v) for v in row) for row in vals),
                       name="constant")


def artificial(alphas: Sequence[float], K: int = 1, law: str = "rayleigh", epsilon: float = 0.0) -> FadingModel:
    """Non-fading gains ``alphas`` times a pseudo-random user signature.

    ``zeta_{i, i+s} = alphas[s] * P_{i+s}`` with ``E ||P||^2 = 1``.
    """
    return FadingModel("artificial", len(alphas) - 1, K, scales=tuple(float(a) for a in alphas),
                       pseudo=law, epsilon=float(epsilon), name=f"artificial({law})")


def soft_handoff(alpha: float, K: int = 1, fading: str = "none", epsilon: float = 0.0) -> FadingModel:
    """``d = 1``: own base station gain 1, neighbour gain ``alpha``."""
    return _named(1, (1.0, alpha), K, fading, "soft_handoff", epsilon)


def wyner_symmetric(alpha: float, K: int = 1, fading: str = "none", epsilon: float = 0.0) -> FadingModel:
    """``d = 2``: offsets 0 and 2 have gain ``alpha``, offset 1 gain 1."""
    return _named(2, (alpha, 1.0, alpha), K, fading, "wyner_symmetric", epsilon)


def wyner_asymmetric(alpha: float, K: int = 1, fading: str = "none", epsilon: float = 0.0) -> FadingModel:
    """``d = 2``: offset 0 has gain 1, offsets 1 and 2 gain ``alpha``."""
    return _named(2, (1.0, alpha, alpha), K, fading, "wyner_asymmetric", epsilon)


def asym_wyner_d2(alpha: float, beta: float, K: int = 1) -> FadingModel:
    """Rayleigh ``d = 2`` with ``zeta_{i-2,i} = alpha a``, ``zeta_{i-1,i} = beta b``."""
    return rayleigh(2, K, scales=(1.0, beta, alpha), name=f"asym_d2(alpha={alpha}, beta={beta})")


NAMED_FADINGS = ("none", "rayleigh", "uniform_ring")


def _named(d, gains, K, fading, name, epsilon=0.0) -> FadingModel:
    if fading == "none":
        m = constant(gains, K)
        return replace(m, name=name)
    if fading == "rayleigh":
        return rayleigh(d, K, scales=gains, name=f"{name}+rayleigh")
    if fading == "uniform_ring":
        return replace(uniform_ring(d, epsilon, K, scales=gains), name=f"{name}+ring(eps={epsilon})")
    raise ModelError(f"unknown fading {fading!r}")


# -- streams ----------------------------------------------------------------

def _block(model: FadingModel, seed: int, replica: int, b: int) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replica), int(b)))
    return model.sample(np.random.Generator(np.random.PCG64(ss)), BLOCK_CELLS)


def cells(model: FadingModel, seed: int, replica: int, start: int, count: int) -> np.ndarray:
    """Cells ``start .. start+count-1`` (1-based) of one replica stream."""
    if count <= 0:
        return np.empty((0, model.d + 1, model.K), dtype=complex)
    if start < 1:
        raise ValueError("cell indices start at 1")
    if not model.is_random:
        return np.broadcast_to(model.constant_cell(), (count, model.d + 1, model.K)).copy()
    first = (start - 1) // BLOCK_CELLS
    last = (start + count - 2) // BLOCK_CELLS
    chunks = [_block(model, seed, replica, b) for b in range(first, last + 1)]
    allc = np.concatenate(chunks, axis=0)
    off = (start - 1) - first * BLOCK_CELLS
    return allc[off:off + count]


def cells_batch(model: FadingModel, seed: int, replicas: Sequence[int], start: int, count: int) -> np.ndarray:
    """Stack of :func:`cells` over replicas, shape ``(R, count, d+1, K)``."""
    if not model.is_random:
        c = model.constant_cell()
        return np.broadcast_to(c, (len(replicas), count) + c.shape).copy()
    return np.stack([cells(model, seed, r, start, count) for r in replicas])


@dataclass
class FadingStream:
    """Single-owner cursor over the cell sequence of one replica.

    Parallel work should clone the stream with a different ``replica`` or
    ``cursor`` instead of sharing it.
    """

    model: FadingModel
    seed: int = 0
    replica: int = 0
    cursor: int = 1
    _cache: tuple = field(default=(None, None), repr=False, compare=False)

    def take(self, count: int) -> np.ndarray:
        """Return the next ``count`` cells and advance the cursor."""
        out = cells(self.model, self.seed, self.replica, self.cursor, count)
        self.cursor += count
        return out

    def next_column(self) -> tuple:
        """Coefficients of the next cell, ordered ``zeta_{s-d,s}, .., zeta_{s,s}``."""
        b = (self.cursor - 1) // BLOCK_CELLS
        if self._cache[0] != b:
            data = cells(self.model, self.seed, self.replica, b * BLOCK_CELLS + 1, BLOCK_CELLS)
            self._cache = (b, data)
        cell = self._cache[1][(self.cursor - 1) % BLOCK_CELLS]
        self.cursor += 1
        return tuple(cell[s].copy() for s in range(self.model.d, -1, -1))

    def clone(self, *, cursor: int | None = None, replica: int | None = None) -> "FadingStream":
        return FadingStream(self.model, self.seed,
                            self.replica if replica is None else replica,
                            self.cursor if cursor is None else cursor)


# -- log moments ------------------------------------------------------------

@dataclass(frozen=True)
class Moment:
    value: float
    stderr: float = 0.0
    analytic: bool = False


def _mc(values) -> Moment:
    values = np.asarray(values, dtype=float)
    return Moment(float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size)))


def _ring_log_mean(eps: float) -> float:
    # E log r, r ~ U[1-eps, 1+eps]
    if eps == 0:
        return 0.0
    a, b = 1.0 - eps, 1.0 + eps
    F = lambda r: r * np.log(r) - r if r > 0 else 0.0  # noqa: E731
    return float((F(b) - F(a)) / (b - a))


def log_moment(model: FadingModel, offset: int, samples: int = 100_000, seed: int = 0) -> Moment:
    """``E log ||zeta||`` for the coefficient at ``offset`` (norm over users).

    Closed forms are used where known; otherwise a Monte Carlo estimate with
    its standard error is returned.
    """
    if not 0 <= offset <= model.d:
        raise ValueError(f"offset must be in [0, {model.d}]")
    K = model.K
    if model.kind == "constant":
        v = model.constant_cell()[offset]
        return Moment(float(np.log(np.linalg.norm(v))), 0.0, True)
    scale = model.scales[offset]
    if model.kind in ("rayleigh", "correlated_rayleigh"):
        if scale == 0:
            return Moment(-np.inf, 0.0, True)
        # ||zeta||^2 / scale^2 ~ Gamma(K, 1)
        return Moment(float(np.log(scale) + 0.5 * digamma(K)), 0.0, True)
    if model.kind == "uniform_ring" and K == 1:
        return Moment(float(np.log(scale) + _ring_log_mean(model.epsilon)), 0.0, True)
    if model.kind == "artificial":
        p = pseudo_log_norm2(model.pseudo, K, model.epsilon, samples, seed)
        if p.analytic:
            return Moment(float(np.log(scale) + 0.5 * p.value), 0.0, True)
    rng = np.random.default_rng(seed)
    z = model.sample(rng, samples)[:, offset, :]
    return _mc(np.log(np.linalg.norm(z, axis=-1)))


def cross_log_moment(model: FadingModel, samples: int = 100_000, seed: int = 0) -> Moment:
    """``E log |zeta_0 zeta_d^dagger|`` over one cell."""
    d, K = model.d, model.K
    if model.kind == "constant":
        c = model.constant_cell()
        return Moment(float(np.log(abs(np.vdot(c[0], c[d])))), 0.0, True)
    s0, sd = model.scales[0], model.scales[d]
    if model.kind == "rayleigh":
        # x y^dagger | y ~ CN(0, ||y||^2), so |x y^dagger|^2 = ||y||^2 * Exp(1)
        return Moment(float(np.log(s0 * sd) + 0.5 * (digamma(K) - EULER_GAMMA)), 0.0, True)
    if model.kind == "correlated_rayleigh" and K == 1:
        return Moment(float(np.log(s0 * sd) - EULER_GAMMA), 0.0, True)
    if model.kind == "uniform_ring" and K == 1:
        return Moment(float(np.log(s0 * sd) + 2 * _ring_log_mean(model.epsilon)), 0.0, True)
    if model.kind == "artificial":
        p = pseudo_log_norm2(model.pseudo, K, model.epsilon, samples, seed)
        if p.analytic:
            return Moment(float(np.log(s0 * sd) + p.value), 0.0, True)
    rng = np.random.default_rng(seed)
    z = model.sample(rng, samples)
    return _mc(np.log(np.abs(np.sum(z[:, d, :] * np.conj(z[:, 0, :]), axis=-1))))


def pseudo_log_norm2(law: str, K: int = 1, epsilon: float = 0.0,
                     samples: int = 100_000, seed: int = 0) -> Moment:
    """``E log ||P||^2`` for a pseudo-fading law (always ``<= 0`` by Jensen)."""
    if law in ("constant", "unit_phase"):
        return Moment(0.0, 0.0, True)
    if law == "rayleigh":
        # K ||P||^2 ~ Gamma(K, 1)
        return Moment(float(digamma(K) - np.log(K)), 0.0, True)
    if law == "uniform_ring" and K == 1:
        return Moment(float(2 * _ring_log_mean(epsilon) - np.log(1 + epsilon ** 2 / 3)), 0.0, True)
    rng = np.random.default_rng(seed)
    P = _pseudo(rng, (samples, K), law, epsilon)
    return _mc(np.log(np.sum(np.abs(P) ** 2, axis=-1)))
