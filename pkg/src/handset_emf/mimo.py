"""MIMO channel model, SVD stream decoupling, per-stream SNR and capacity.

The singular value decomposition is computed with a one-sided (Hestenes)
Jacobi iteration. Channel matrices in this simulator never exceed 8x8, so the
O(n^3) per sweep cost is irrelevant and the method gives singular values with
high relative accuracy.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, ParameterError, ShapeError, StateError

__all__ = [
    'ChannelMatrix', 'PowerBudget', 'StreamSignal', 'generate_channel',
    'svd_decompose', 'decouple_streams', 'stream_snr', 'ergodic_capacity',
    'mean_capacity'
]

JACOBI_TOL = 1e-12
SIGMA_CLAMP = 1e-12
_MAX_SWEEPS = 80


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex r x t channel realization with an optional cached SVD.

    ``u`` is r x r, ``v`` is t x t and ``sigma`` holds the min(r, t)
    singular values in non-increasing order, so that
    ``entries == u @ S @ v.conj().T`` with ``S`` the r x t diagonal matrix.
    """
    entries: np.ndarray
    u: Optional[np.ndarray] = field(default=None, repr=False)
    sigma: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        h = np.asarray(self.entries)
        if h.ndim != 2:
            raise ShapeError(f"channel entries must be 2-D, got shape {h.shape}")
        if h.shape[0] < 1 or h.shape[1] < 1:
            raise DimensionError(f"channel dimensions must be >= 1, got {h.shape}")
        object.__setattr__(self, 'entries', _frozen(h))
        for name in ('u', 'v'):
            m = getattr(self, name)
            if m is not None:
                object.__setattr__(self, name, _frozen(m))
        if self.sigma is not None:
            s = np.array(self.sigma, dtype=float)
            s.setflags(write=False)
            object.__setattr__(self, 'sigma', s)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def has_svd(self) -> bool:
        return self.sigma is not None

    @property
    def rank(self) -> int:
        """Number of nonzero (unclamped) singular values."""
        self._require_svd()
        return int(np.count_nonzero(self.sigma))

    def sigma_matrix(self) -> np.ndarray:
        self._require_svd()
        s = np.zeros((self.rows, self.cols))
        k = len(self.sigma)
        s[:k, :k] = np.diag(self.sigma)
        return s

    def submatrix(self, rows: int, cols: int) -> 'ChannelMatrix':
        """Leading ``rows`` x ``cols`` block, without any cached SVD."""
        if not (1 <= rows <= self.rows and 1 <= cols <= self.cols):
            raise DimensionError(
                f"submatrix {rows}x{cols} outside {self.rows}x{self.cols}")
        return ChannelMatrix(self.entries[:rows, :cols])

    def _require_svd(self):
        if self.sigma is None:
            raise StateError("channel has no cached SVD; call svd_decompose first")


@dataclass(frozen=True)
class PowerBudget:
    """Per-antenna powers, UL/DL split ratios, noise variance and bandwidth.

    ``symbol_power`` is the per-antenna symbol power P_i (used as the UL
    power in the split form). ``downlink_power`` defaults to the same values.
    """
    symbol_power: Sequence[float]
    alpha: Sequence[float] = (1.0,)
    noise_var: float = 1.0
    bandwidth_hz: float = 1.0
    downlink_power: Optional[Sequence[float]] = None

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.symbol_power, dtype=float))
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        d = p if self.downlink_power is None else np.atleast_1d(
            np.asarray(self.downlink_power, dtype=float))
        if np.any(p < 0) or np.any(d < 0):
            raise ParameterError("antenna powers must be >= 0")
        if np.any(a < 0) or np.any(a > 1):
            raise ParameterError("split ratio alpha must lie in [0, 1]")
        if not self.noise_var > 0:
            raise ParameterError(f"noise variance must be > 0, got {self.noise_var}")
        if not self.bandwidth_hz > 0:
            raise ParameterError(f"bandwidth must be > 0, got {self.bandwidth_hz}")
        object.__setattr__(self, 'symbol_power', tuple(p.tolist()))
        object.__setattr__(self, 'alpha', tuple(a.tolist()))
        object.__setattr__(self, 'downlink_power', tuple(d.tolist()))

    def _per_stream(self, values, n):
        v = np.asarray(values, dtype=float)
        if len(v) == 1:
            return np.full(n, v[0])
        if len(v) < n:
            raise ShapeError(f"budget has {len(v)} entries, need {n}")
        return v[:n]


@dataclass(frozen=True)
class StreamSignal:
    """Signals expressed in the singular basis of the channel."""
    x: np.ndarray
    noise: np.ndarray
    y: np.ndarray


def generate_channel(r: int, t: int, seed: int = 0, model: str = 'iid-rayleigh',
                     entries: Optional[Sequence[complex]] = None) -> ChannelMatrix:
    """Draw (or build) an r x t channel matrix.

    Parameters
    ----------
    r, t : int
        Receive and transmit antenna counts.
    seed : int
        Seed for the ``iid-rayleigh`` model. Equal seeds give equal matrices.
    model : {'iid-rayleigh', 'fixed-entries'}
        ``iid-rayleigh`` draws unit-variance circular complex Gaussian
        entries. ``fixed-entries`` takes ``entries`` in row-major order.
    """
    if r < 1 or t < 1:
        raise DimensionError(f"channel dimensions must be >= 1, got {r}x{t}")
    if model == 'iid-rayleigh':
        rng = np.random.default_rng(seed)
        h = (rng.standard_normal((r, t)) + 1j * rng.standard_normal((r, t))) / np.sqrt(2)
        return ChannelMatrix(h)
    if model == 'fixed-entries':
        if entries is None:
            raise ShapeError("fixed-entries model requires an entry list")
        e = np.asarray(entries, dtype=complex).ravel()
        if e.size != r * t:
            raise ShapeError(f"expected {r * t} entries for {r}x{t}, got {e.size}")
        return ChannelMatrix(e.reshape(r, t))
    raise ParameterError(f"unknown channel model {model!r}")


def _complete_basis(q: np.ndarray, n: int) -> np.ndarray:
    """Extend orthonormal columns ``q`` (n x k) to an n x n unitary matrix."""
    cols = [q[:, j] for j in range(q.shape[1])]
    for j in range(n):
        if len(cols) == n:
            break
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        for _ in range(2):  # re-orthogonalize once for stability
            for c in cols:
                e = e - c * np.vdot(c, e)
        norm = np.linalg.norm(e)
        if norm > 1e-6:
            cols.append(e / norm)
    return np.column_stack(cols) if cols else np.zeros((n, 0), dtype=complex)


def _jacobi_tall(a: np.ndarray):
    """One-sided Jacobi on a tall (m >= n) matrix: returns (U_full, s, V)."""
    m, n = a.shape
    a = a.astype(complex).copy()
    v = np.eye(n, dtype=complex)
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap, aq = a[:, p], a[:, q]
                alpha = np.vdot(ap, ap).real
                beta = np.vdot(aq, aq).real
                gamma = np.vdot(ap, aq)
                g = abs(gamma)
                if g == 0.0 or g <= JACOBI_TOL * np.sqrt(alpha * beta):
                    continue
                rotated = True
                phase = gamma / g
                zeta = (beta - alpha) / (2.0 * g)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                aq_t = aq * np.conj(phase)
                a[:, p], a[:, q] = c * ap - s * aq_t, s * ap + c * aq_t
                vq_t = v[:, q] * np.conj(phase)
                v[:, p], v[:, q] = c * v[:, p] - s * vq_t, s * v[:, p] + c * vq_t
        if not rotated:
            break
    sigma = np.linalg.norm(a, axis=0)
    order = np.argsort(-sigma, kind='stable')
    sigma, a, v = sigma[order], a[:, order], v[:, order]
    smax = sigma[0] if n else 0.0
    keep = sigma > SIGMA_CLAMP * smax if smax > 0 else np.zeros(n, dtype=bool)
    sigma = np.where(keep, sigma, 0.0)
    u_thin = a[:, keep] / sigma[keep]
    u = _complete_basis(u_thin, m)
    return u, sigma, v


def svd_decompose(h: ChannelMatrix) -> ChannelMatrix:
    """Return a copy of ``h`` with U, singular values and V cached.

    Singular values below ``1e-12 * sigma_max`` are clamped to zero.

    >>> svd_decompose(ChannelMatrix([[3, 0], [0, 4]])).sigma.tolist()
    [4.0, 3.0]
    """
    a = np.asarray(h.entries)
    if h.rows >= h.cols:
        u, s, v = _jacobi_tall(a)
    else:
        # H^H = U' S V'^H  =>  H = V' S U'^H
        v, s, u = _jacobi_tall(a.conj().T)
    return ChannelMatrix(a, u=u, sigma=s, v=v)


def decouple_streams(h: ChannelMatrix, x: Sequence[complex],
                     n: Sequence[complex]) -> StreamSignal:
    """Rotate transmit symbols and noise into the channel's singular basis.

    Returns x~ = V^H x, n~ = U^H n, and the r received entries
    y~_i = sigma_i x~_i + n~_i (y~_i = n~_i where no transmit stream exists).
    """
    h._require_svd()
    x = np.asarray(x, dtype=complex).ravel()
    n = np.asarray(n, dtype=complex).ravel()
    if x.size != h.cols:
        raise ShapeError(f"expected {h.cols} transmit symbols, got {x.size}")
    if n.size != h.rows:
        raise ShapeError(f"expected {h.rows} noise samples, got {n.size}")
    xt = h.v.conj().T @ x
    nt = h.u.conj().T @ n
    y = nt.copy()
    k = len(h.sigma)
    y[:k] += h.sigma * xt[:k]
    return StreamSignal(x=xt, noise=nt, y=y)


def stream_snr(h: ChannelMatrix, budget: PowerBudget, uplink_count: int,
               split: bool = True) -> np.ndarray:
    """Per-stream SNR (linear) with UL/DL power splitting.

    With ``split`` the SNR of stream i is
    ``uplink_count * sigma_i**2 / noise_var * (a_i P_i_ul + (1 - a_i) P_i_dl)``,
    otherwise the basic ``sigma_i**2 * P_i / noise_var``.
    """
    h._require_svd()
    if uplink_count < 0 or uplink_count > h.cols:
        raise ParameterError(
            f"uplink_count must be in [0, {h.cols}], got {uplink_count}")
    k = len(h.sigma)
    s2 = h.sigma ** 2
    p_ul = budget._per_stream(budget.symbol_power, k)
    if not split:
        return s2 * p_ul / budget.noise_var
    a = budget._per_stream(budget.alpha, k)
    p_dl = budget._per_stream(budget.downlink_power, k)
    return uplink_count * s2 / budget.noise_var * (a * p_ul + (1 - a) * p_dl)


def ergodic_capacity(h: ChannelMatrix, snr: float, budget: Optional[PowerBudget] = None,
                     bandwidth_hz: Optional[float] = None) -> float:
    """Equal-power capacity W * sum_i log2(1 + snr / N_t * sigma_i**2) in bit/s.

    The bandwidth comes from ``budget`` unless ``bandwidth_hz`` is given.
    """
    h._require_svd()
    if snr < 0:
        raise ParameterError(f"snr must be >= 0, got {snr}")
    if bandwidth_hz is None:
        bandwidth_hz = budget.bandwidth_hz if budget is not None else 1.0
    if not bandwidth_hz > 0:
        raise ParameterError(f"bandwidth must be > 0, got {bandwidth_hz}")
    return float(bandwidth_hz * np.sum(np.log2(1.0 + snr / h.cols * h.sigma ** 2)))


def mean_capacity(channels: Sequence[ChannelMatrix], snr: float,
                  bandwidth_hz: float = 1.0) -> float:
    """Sample mean of the capacity over decomposed channel realizations."""
    if not channels:
        raise ParameterError("need at least one channel realization")
    return float(np.mean([ergodic_capacity(h, snr, bandwidth_hz=bandwidth_hz)
                          for h in channels]))
