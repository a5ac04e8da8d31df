"""Hot Euler-Maruyama path loops: numba kernels with a numpy fallback twin.

Both backends implement the identical algorithm, including the RNG: each
path draws from its own splitmix64 substream keyed by (seed, path index),
so path i is reproducible regardless of thread count and backend, and
common random numbers across policies come for free by sharing the seed.

Backend selection: the environment flag ``DIVBAR_BACKEND`` (``numba`` or
``numpy``) wins; otherwise numba is used when importable.  Per step, every
path consumes exactly two 64-bit draws (one Box-Muller normal) so that
perturbed policies see the same noise.

Kernel state per path: (S, X); each step first projects onto the barrier
(lump dividend D = (S - z_bar X)/(1 + z_bar)), then accumulates the
discounted reward trapezoid, then takes a plain Euler step with the
table-interpolated controls pi(z) and cbar(z).
"""

import math
import os

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# Per-path keys use a different odd constant and a full finalizer round, so
# no stream is a time-shift of another (the Weyl increment is _GOLDEN).
_PATHKEY = 0xD1B54A32D192ED03
_INV53 = 2.0 ** -53

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap

    prange = range


def default_backend() -> str:
    env = os.environ.get("DIVBAR_BACKEND", "").strip().lower()
    if env in ("numpy", "np"):
        return "numpy"
    if env in ("numba", "jit"):
        if not HAVE_NUMBA:
            raise RuntimeError("DIVBAR_BACKEND=numba but numba is not importable")
        return "numba"
    if env:
        raise RuntimeError(f"unknown DIVBAR_BACKEND value: {env!r}")
    return "numba" if HAVE_NUMBA else "numpy"


@njit(cache=True, parallel=True)
def _paths_numba(seed, n_paths, n_steps, dt, s0, x0,
                 rho, ex, sig, r, z_bar, dz_inv,
                 pi_tab, cbar_tab, lncbar_tab, disc, lnx_coef, f_const):
    golden = np.uint64(_GOLDEN)
    mix1 = np.uint64(_MIX1)
    mix2 = np.uint64(_MIX2)
    pathkey = np.uint64(_PATHKEY)
    sh30 = np.uint64(30)
    sh27 = np.uint64(27)
    sh31 = np.uint64(31)
    sh11 = np.uint64(11)
    sqdt = math.sqrt(dt)
    two_pi = 2.0 * math.pi
    m_last = pi_tab.shape[0] - 1

    rewards = np.empty(n_paths)
    invalid = np.zeros(n_paths, dtype=np.uint8)
    zmin = np.empty(n_paths)
    zmax = np.empty(n_paths)
    divtot = np.empty(n_paths)
    excess = np.empty(n_paths)

    for p in prange(n_paths):
        st = np.uint64(seed) ^ (np.uint64(p + 1) * pathkey)
        st = (st ^ (st >> sh30)) * mix1
        st = (st ^ (st >> sh27)) * mix2
        st = st ^ (st >> sh31)
        s = s0
        x = x0
        acc = 0.0
        dv = 0.0
        zmn = 1e300
        zmx = -1e300
        exc = -1e300
        bad = False
        for k in range(n_steps + 1):
            if s > z_bar * x:
                d = (s - z_bar * x) / (1.0 + z_bar)
                s -= d
                x += d
                dv += d
                e = s / x - z_bar
                if e > exc:
                    exc = e
            z = s / x
            if z < zmn:
                zmn = z
            if z > zmx:
                zmx = z
            t = z * dz_inv
            i = int(t)
            if i >= m_last:
                i = m_last - 1
            w = t - i
            pi = pi_tab[i] + w * (pi_tab[i + 1] - pi_tab[i])
            cb = cbar_tab[i] + w * (cbar_tab[i + 1] - cbar_tab[i])
            lncb = lncbar_tab[i] + w * (lncbar_tab[i + 1] - lncbar_tab[i])
            f = lncb + lnx_coef * math.log(x) + f_const
            if k == 0 or k == n_steps:
                acc += 0.5 * disc[k] * f
            else:
                acc += disc[k] * f
            if k == n_steps:
                break
            st = st + golden
            u = st
            u = (u ^ (u >> sh30)) * mix1
            u = (u ^ (u >> sh27)) * mix2
            u = u ^ (u >> sh31)
            u1 = (np.float64(u >> sh11) + 0.5) * _INV53
            st = st + golden
            u = st
            u = (u ^ (u >> sh30)) * mix1
            u = (u ^ (u >> sh27)) * mix2
            u = u ^ (u >> sh31)
            u2 = (np.float64(u >> sh11) + 0.5) * _INV53
            xi = math.sqrt(-2.0 * math.log(u1)) * math.cos(two_pi * u2)
            s = s + (rho + ex * pi) * s * dt + sig * pi * s * sqdt * xi
            x = x + (r * x - cb * x) * dt
            if s < 0.0 or x < 0.0:
                bad = True
                break
        if bad:
            rewards[p] = np.nan
            invalid[p] = 1
        else:
            rewards[p] = acc * dt
        zmin[p] = zmn
        zmax[p] = zmx
        divtot[p] = dv
        excess[p] = exc
    return rewards, invalid, zmin, zmax, divtot, excess


def _paths_numpy(seed, n_paths, n_steps, dt, s0, x0,
                 rho, ex, sig, r, z_bar, dz_inv,
                 pi_tab, cbar_tab, lncbar_tab, disc, lnx_coef, f_const):
    golden = np.uint64(_GOLDEN)
    mix1 = np.uint64(_MIX1)
    mix2 = np.uint64(_MIX2)
    sqdt = math.sqrt(dt)
    two_pi = 2.0 * math.pi
    m_last = len(pi_tab) - 1

    p_idx = np.arange(1, n_paths + 1, dtype=np.uint64)
    st = np.uint64(seed) ^ (p_idx * np.uint64(_PATHKEY))
    st = (st ^ (st >> np.uint64(30))) * mix1
    st = (st ^ (st >> np.uint64(27))) * mix2
    st = st ^ (st >> np.uint64(31))
    s = np.full(n_paths, float(s0))
    x = np.full(n_paths, float(x0))
    acc = np.zeros(n_paths)
    dv = np.zeros(n_paths)
    zmn = np.full(n_paths, 1e300)
    zmx = np.full(n_paths, -1e300)
    exc = np.full(n_paths, -1e300)
    bad = np.zeros(n_paths, dtype=bool)

    def draw(state):
        state = state + golden
        u = state
        u = (u ^ (u >> np.uint64(30))) * mix1
        u = (u ^ (u >> np.uint64(27))) * mix2
        u = u ^ (u >> np.uint64(31))
        return state, ((u >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53

    for k in range(n_steps + 1):
        over = s > z_bar * x
        if np.any(over):
            d = np.where(over, (s - z_bar * x) / (1.0 + z_bar), 0.0)
            s = s - d
            x = x + d
            dv += d
            np.maximum(exc, np.where(over, s / x - z_bar, -1e300), out=exc)
        z = s / x
        np.minimum(zmn, z, out=zmn)
        np.maximum(zmx, z, out=zmx)
        t = z * dz_inv
        i = t.astype(np.int64)
        np.minimum(i, m_last - 1, out=i)
        w = t - i
        pi = pi_tab[i] + w * (pi_tab[i + 1] - pi_tab[i])
        cb = cbar_tab[i] + w * (cbar_tab[i + 1] - cbar_tab[i])
        lncb = lncbar_tab[i] + w * (lncbar_tab[i + 1] - lncbar_tab[i])
        f = lncb + lnx_coef * np.log(x) + f_const
        wgt = 0.5 if (k == 0 or k == n_steps) else 1.0
        acc += np.where(bad, 0.0, wgt * disc[k] * f)
        if k == n_steps:
            break
        st, u1 = draw(st)
        st, u2 = draw(st)
        xi = np.sqrt(-2.0 * np.log(u1)) * np.cos(two_pi * u2)
        s_new = s + (rho + ex * pi) * s * dt + sig * pi * s * sqdt * xi
        x_new = x + (r * x - cb * x) * dt
        bad = bad | (s_new < 0.0) | (x_new < 0.0)
        # Breached paths freeze at their last valid state; reported as NaN.
        s = np.where(bad, s, s_new)
        x = np.where(bad, x, x_new)
    rewards = np.where(bad, np.nan, acc * dt)
    return (rewards, bad.astype(np.uint8), zmn, zmx, dv, exc)


def run_paths(backend, *args):
    if backend == "numba":
        return _paths_numba(*args)
    if backend == "numpy":
        return _paths_numpy(*args)
    raise ValueError(f"unknown backend {backend!r}")
