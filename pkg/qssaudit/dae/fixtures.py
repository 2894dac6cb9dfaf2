"""
Small DAE models with known behaviour, used by the tests and as reference
cases for the integrators.
"""

from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .model import DaeModel
from .state import DiscreteState, PartitionedState, StateLayout


def _matrix(block, rows: int, cols: int) -> np.ndarray:
    if block is None:
        return np.zeros((rows, cols))
    M = np.atleast_2d(np.asarray(block, dtype=float)).reshape(rows, cols)
    return M


def _names(partition: str, device: str, n: int, var: str) -> tuple:
    if n == 1:
        return (f"{partition}.{device}.{var}",)
    return tuple(f"{partition}.{device}.{var}{i}" for i in range(n))


class LinearDae(DaeModel):
    """
    Constant-coefficient DAE:

        z_c' = h_zc z_c + h_x x + h_y y
        x'   = f_zc z_c + f_x x + f_y y
        0    = g_zc z_c + g_x x + g_y y + g0
    """

    def __init__(
        self,
        *,
        n_zc: int = 0,
        n_x: int = 0,
        n_y: int = 0,
        f_zc=None, f_x=None, f_y=None,
        g_zc=None, g_x=None, g_y=None,
        h_zc=None, h_x=None, h_y=None,
        g0: Optional[Sequence[float]] = None,
        zc0: Optional[Sequence[float]] = None,
        x0: Optional[Sequence[float]] = None,
        y0: Optional[Sequence[float]] = None,
        device: str = "lin",
    ):
        self.f_zc = _matrix(f_zc, n_x, n_zc)
        self.f_x = _matrix(f_x, n_x, n_x)
        self.f_y = _matrix(f_y, n_x, n_y)
        self.g_zc = _matrix(g_zc, n_y, n_zc)
        self.g_x = _matrix(g_x, n_y, n_x)
        self.g_y = _matrix(g_y, n_y, n_y)
        self.h_zc = _matrix(h_zc, n_zc, n_zc)
        self.h_x = _matrix(h_x, n_zc, n_x)
        self.h_y = _matrix(h_y, n_zc, n_y)
        self.g0 = np.zeros(n_y) if g0 is None else np.asarray(g0, dtype=float)
        self.zc0 = np.zeros(n_zc) if zc0 is None else np.asarray(zc0, dtype=float)
        self.x0 = np.zeros(n_x) if x0 is None else np.asarray(x0, dtype=float)
        self.y0 = np.zeros(n_y) if y0 is None else np.asarray(y0, dtype=float)
        self.layout = StateLayout(
            zc=_names("zc", device, n_zc, "z"),
            x=_names("x", device, n_x, "x"),
            y=_names("y", device, n_y, "y"),
        )

    def f(self, zc, zd, x, y):
        return self.f_zc @ zc + self.f_x @ x + self.f_y @ y

    def g(self, zc, zd, x, y):
        return self.g_zc @ zc + self.g_x @ x + self.g_y @ y + self.g0

    def hc(self, zc, zd, x, y):
        return self.h_zc @ zc + self.h_x @ x + self.h_y @ y

    def initial_state(self) -> PartitionedState:
        return self.make_state(self.zc0, DiscreteState(), self.x0, self.y0)


class TwoTimescale(LinearDae):
    """
    z' = −z + x,  ε x' = −x + y,  0 = y − z/2.

    On the manifold x = y = z/2, so the reduced model is z' = −z/2.
    """

    def __init__(self, eps: float = 0.1, z0: float = 1.0):
        self.eps = eps
        super().__init__(
            n_zc=1, n_x=1, n_y=1,
            h_zc=-1.0, h_x=1.0,
            f_x=-1.0 / eps, f_y=1.0 / eps,
            g_zc=-0.5, g_y=1.0,
            zc0=[z0], x0=[0.5 * z0], y0=[0.5 * z0],
            device="tts",
        )

    def exact(self, t: float) -> np.ndarray:
        """(z, x, y) of the complete model at time t."""
        A = np.array([[-1.0, 1.0], [0.5 / self.eps, -1.0 / self.eps]])
        z, x = scipy.linalg.expm(A * t) @ np.array([self.zc0[0], self.x0[0]])
        return np.array([z, x, 0.5 * z])

    def reduced(self, t: float) -> float:
        """z of the QSS model at time t."""
        return float(self.zc0[0] * np.exp(-0.5 * t))


def two_timescale(eps: float = 0.1, z0: float = 1.0) -> TwoTimescale:
    return TwoTimescale(eps, z0)


def scalar_fast(a: float, b: float, p: float, q: float, eps: float = 1.0) -> LinearDae:
    """ε x' = a x + b y, 0 = p x + q y; reduced fast eigenvalue (a − b p / q) / ε."""
    return LinearDae(
        n_x=1, n_y=1,
        f_x=a / eps, f_y=b / eps,
        g_x=p, g_y=q,
        device="sf",
    )


def oscillator(omega: float = 1.0, amplitude: float = 1.0) -> LinearDae:
    """Undamped fast pair: a' = ω b, b' = −ω a."""
    return LinearDae(
        n_x=2,
        f_x=[[0.0, omega], [-omega, 0.0]],
        x0=[amplitude, 0.0],
        device="osc",
    )


def decay(rate: float = 1.0, z0: float = 1.0) -> LinearDae:
    """z' = −rate·z with no fast or algebraic part."""
    return LinearDae(n_zc=1, h_zc=-rate, zc0=[z0], device="decay")


class SingularCrossing(DaeModel):
    """
    z' = rate,  ε x' = −x + y,  0 = s(z)(y − 1 − z) with s(z) = max(1 − z, 0).

    g_y = s(z) vanishes at z = 1 and stays zero beyond: the algebraic
    variable loses its defining equation when the slow variable crosses 1.
    """

    def __init__(self, rate: float = 0.1, z0: float = 0.0, eps: float = 0.1):
        self.rate = rate
        self.z0 = z0
        self.eps = eps
        self.layout = StateLayout(
            zc=("zc.fold.z",), x=("x.fold.x",), y=("y.fold.y",)
        )

    def f(self, zc, zd, x, y):
        return (-x + y) / self.eps

    def g(self, zc, zd, x, y):
        return max(1.0 - zc[0], 0.0) * (y - 1.0 - zc[0])

    def hc(self, zc, zd, x, y):
        return np.array([self.rate])

    def initial_state(self) -> PartitionedState:
        v = 1.0 + self.z0
        return self.make_state([self.z0], DiscreteState(), [v], [v])


class SwitchedGain(DaeModel):
    """
    x' = −x + y,  0 = m·y − 1, with the discrete gain m switched to
    ``m_after`` at ``t_switch``. m_after = 0 leaves y undefined.
    """

    def __init__(self, t_switch: float = 1.0, m_before: float = 1.0, m_after: float = 0.0):
        self.t_switch = t_switch
        self.m_before = m_before
        self.m_after = m_after
        self.layout = StateLayout(zd=("zd.gain.m",), x=("x.gain.x",), y=("y.gain.y",))

    def f(self, zc, zd, x, y):
        return -x + y

    def g(self, zc, zd, x, y):
        return zd.taps[0] * y - 1.0

    def hc(self, zc, zd, x, y):
        return np.zeros(0)

    def hd(self, state, now):
        if now >= self.t_switch - 1e-12:
            return DiscreteState(taps=(self.m_after,))
        return state.zd

    def discrete_instants(self, zd, t0, t1):
        return [self.t_switch] if t0 < self.t_switch <= t1 + 1e-12 else []

    def initial_state(self) -> PartitionedState:
        v = 1.0 / self.m_before
        return self.make_state((), DiscreteState(taps=(self.m_before,)), [v], [v])
