"""Independent reference computations used by the tests.

Nothing here imports the package's integrator, basis or solver.
"""
import mpmath
import numpy as np
from scipy.integrate import quad

EXAMPLE_A = np.array([[1.0, 4.0], [5.0, -1.0]])
EXAMPLE_B = np.array([[2.0, 1.0], [0.6, 1.0]])
EXAMPLE_X0 = np.array([0.0, -0.25])
EXAMPLE_CONTROLS = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 8.0]])


def linear_state(A, B, x0, u, t, dps=40):
    """Closed-form x(t) for constant u via the augmented matrix exponential in high precision."""
    n, m = B.shape
    mpmath.mp.dps = dps
    M = mpmath.zeros(n + m, n + m)
    for i in range(n):
        for j in range(n):
            M[i, j] = mpmath.mpf(repr(float(A[i, j])))
        for j in range(m):
            M[i, n + j] = mpmath.mpf(repr(float(B[i, j])))
    E = mpmath.expm(M * mpmath.mpf(repr(float(t))))
    z = [mpmath.mpf(repr(float(v))) for v in list(x0) + list(u)]
    return np.array([float(sum(E[i, k] * z[k] for k in range(n + m))) for i in range(n)])


def linear_forward_differences(ts, A=EXAMPLE_A, B=EXAMPLE_B, x0=EXAMPLE_X0, controls=EXAMPLE_CONTROLS):
    """Forward-difference derivatives and the reference-minus-i differences."""
    d = np.array([(linear_state(A, B, x0, u, ts) - x0) / ts for u in controls])
    dU = controls[0] - controls[1:]
    dX = d[0] - d[1:]
    return dU, dX


def prc(theta):
    return -np.sin(theta) * np.exp(3.0 * (np.cos(theta - 0.9 * np.pi) - 1.0))


def prc_projection(L):
    """Coefficients of the L2 projection onto [1/sqrt2, cos k t, sin k t] under dt/pi on [0, 2pi]."""
    c = [quad(lambda t: prc(t) / np.sqrt(2.0), 0, 2 * np.pi, limit=400)[0] / np.pi]
    for k in range(1, L + 1):
        c.append(quad(lambda t: prc(t) * np.cos(k * t), 0, 2 * np.pi, limit=400)[0] / np.pi)
        c.append(quad(lambda t: prc(t) * np.sin(k * t), 0, 2 * np.pi, limit=400)[0] / np.pi)
    return np.array(c)


def fourier_series(c, theta):
    L = (len(c) - 1) // 2
    out = c[0] / np.sqrt(2.0) * np.ones_like(theta)
    for k in range(1, L + 1):
        out = out + c[2 * k - 1] * np.cos(k * theta) + c[2 * k] * np.sin(k * theta)
    return out


def prc_mean_and_std():
    mean = quad(prc, 0, 2 * np.pi, limit=400)[0] / (2 * np.pi)
    var = quad(lambda t: (prc(t) - mean) ** 2, 0, 2 * np.pi, limit=400)[0] / (2 * np.pi)
    return mean, np.sqrt(var)
