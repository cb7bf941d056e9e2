"""Compiled inner loops for compound-Poisson path simulation.

Random numbers come from a counter-based SplitMix64 construction: draw
``c`` of path ``i`` is ``mix(key_i + c * gamma_i)`` with per-path ``key_i`` and
odd ``gamma_i`` derived from ``(seed, i)`` only.  A path's randomness is
therefore independent of the chunking or thread layout used to run it.

Counters are split into four interleaved streams (low two bits):
0 jump radius (and sign in 1D), 1 jump direction in 2D, 2 block arrival times, 3 arrival
order statistics inside a block.

Arrival times are generated per block of ``BLOCK`` jumps: the block end is a
Gamma(BLOCK) variable, and the interior arrival times (uniform order
statistics) are only materialized when a horizon or the exit falls inside
the block.  Both inverse-CDF maps (exponential and jump radius) are read from
tables indexed by the leading-zero count and mantissa of the raw 64-bit draw.
"""

import math

import numba as nb
import numpy as np
from llvmlite import ir
from numba.core import types
from numba.extending import intrinsic

BLOCK = 128
TABLE_BITS = 10
TABLE_BINS = 1 << TABLE_BITS
TABLE_EXP = 63  # rows e = 0..63 cover u in [2^-(e+1), 2^-e)

_G = np.uint64(0x9E3779B97F4A7C15)
_M2 = np.uint64(0xBF58476D1CE4E5B9)
_M3 = np.uint64(0x94D049BB133111EB)
_SALT_KEY = np.uint64(0x243F6A8885A308D3)
_SALT_GAMMA = np.uint64(0x13198A2E03707344)
_INV53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi


@intrinsic
def _clz64(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.ctlz(args[0], ir.Constant(ir.IntType(1), 0))

    return sig, codegen


@nb.njit(inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M2
    z = (z ^ (z >> np.uint64(27))) * _M3
    return z ^ (z >> np.uint64(31))


@nb.njit(inline="always")
def path_key(seed, index):
    base_k = _mix(np.uint64(seed) ^ _SALT_KEY)
    base_g = _mix(np.uint64(seed) ^ _SALT_GAMMA)
    idx = np.uint64(index)
    key = _mix(base_k + idx * _G)
    gam = _mix(base_g + idx * _G) | np.uint64(1)
    return key, gam


@nb.njit(inline="always")
def _draw(key, gam, stream, idx):
    ctr = np.uint64(idx) * np.uint64(4) + np.uint64(stream)
    return _mix(key + ctr * gam)


@nb.njit(inline="always")
def _unit(z):
    """Uniform on (0, 1) from the top 53 bits."""
    return (np.float64(np.int64(z >> np.uint64(11))) + 0.5) * _INV53


@nb.njit(inline="always")
def _lookup(z, tab):
    """``f(u)`` for ``u = z / 2^64`` from a (row = leading zeros, mantissa bin) table."""
    e = _clz64(z)
    if e >= np.uint64(TABLE_EXP):
        e = np.uint64(TABLE_EXP)
        rest = np.uint64(0)
    else:
        rest = z << (e + np.uint64(1))
    j = np.int64(rest >> np.uint64(64 - TABLE_BITS))
    frac = np.float64(np.int64((rest << np.uint64(TABLE_BITS)) >> np.uint64(11))) * _INV53
    row = np.int64(e)
    lo = tab[row, j]
    return lo + frac * (tab[row, j + 1] - lo)


@nb.njit
def _gamma_block(key, gam, blk):
    """Gamma(BLOCK, 1) by Marsaglia-Tsang, from stream 2 of block ``blk``."""
    d = BLOCK - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    base = blk * 96
    for attempt in range(32):
        u1 = _unit(_draw(key, gam, 2, base + 3 * attempt))
        u2 = _unit(_draw(key, gam, 2, base + 3 * attempt + 1))
        x = math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _unit(_draw(key, gam, 2, base + 3 * attempt + 2))
        if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
            return d * v
    # practically unreachable (acceptance rate > 0.99); fall back to a sum of exponentials
    s = 0.0
    for k in range(BLOCK):
        s -= math.log(_unit(_draw(key, gam, 2, base + 3 * 32 + k)))
    return s


@nb.njit
def _block_times(key, gam, blk, t0, t1, out):
    """Arrival times of the BLOCK jumps of block ``blk`` spanning (t0, t1]."""
    n = BLOCK - 1
    for k in range(n):
        out[k] = _unit(_draw(key, gam, 3, blk * BLOCK + k))
    out[:n].sort()
    span = t1 - t0
    for k in range(n):
        out[k] = t0 + span * out[k]
    out[n] = t1


@nb.njit(inline="always")
def _window_empty(dim, lo, hi, pmin, pmax, m, M):
    for c in range(dim):
        upper = hi[c] - M[c]
        lower = lo[c] - m[c]
        if upper <= pmin[c] or lower >= pmax[c] or upper <= lower:
            return True
    return False


@nb.njit(nogil=True)
def walk_paths(seed, first, n, dim, rate, rtab, horizons, lo, hi, pmin, pmax,
               exit_mode, max_jumps, out_min, out_max, out_tau, out_pos, out_jumps):
    """Simulate paths ``first .. first + n - 1`` of the compound-Poisson walk.

    The walk starts at the origin.  A start point ``x`` survives a prefix of
    the walk iff ``lo - min S < x < hi - max S`` in every coordinate.  A path
    stops once no start point of the box ``[pmin, pmax]`` survives, or once the
    last horizon has passed.  For each horizon the running minima/maxima are
    stored; in exit mode the stopping time and displacement are stored too.
    Returns the number of paths that hit ``max_jumps`` before stopping.
    """
    H = horizons.shape[0]
    times = np.empty(BLOCK)
    S = np.zeros(dim)
    m = np.zeros(dim)
    M = np.zeros(dim)
    inv_rate = 1.0 / rate
    overflow = 0
    for p in range(n):
        key, gam = path_key(seed, first + p)
        for c in range(dim):
            S[c] = 0.0
            m[c] = 0.0
            M[c] = 0.0
        h = 0
        while h < H and horizons[h] <= 0.0:
            for c in range(dim):
                out_min[p, h, c] = 0.0
                out_max[p, h, c] = 0.0
            h += 1
        done = (h == H) and not exit_mode
        t0 = 0.0
        blk = 0
        jidx = 0
        tau = math.inf
        while not done:
            t1 = t0 + _gamma_block(key, gam, blk) * inv_rate
            straddle = h < H and t1 > horizons[h]
            if straddle:
                _block_times(key, gam, blk, t0, t1, times)
            for k in range(BLOCK):
                if straddle:
                    tk = times[k]
                    while h < H and tk > horizons[h]:
                        for c in range(dim):
                            out_min[p, h, c] = m[c]
                            out_max[p, h, c] = M[c]
                        h += 1
                    if h == H and not exit_mode:
                        done = True
                        break
                z0 = _draw(key, gam, 0, jidx)
                jidx += 1
                if dim == 1:
                    # low bit gives the sign, the other 63 bits the radius
                    r = _lookup(z0 | np.uint64(1), rtab)
                    if z0 & np.uint64(1):
                        r = -r
                    s0 = S[0] + r
                    S[0] = s0
                    if s0 < m[0]:
                        m[0] = s0
                    elif s0 > M[0]:
                        M[0] = s0
                    else:
                        continue
                else:
                    r = _lookup(z0 | np.uint64(1), rtab)
                    phi = _TWO_PI * _unit(_draw(key, gam, 1, jidx - 1))
                    S[0] += r * math.cos(phi)
                    S[1] += r * math.sin(phi)
                    for c in range(dim):
                        m[c] = min(m[c], S[c])
                        M[c] = max(M[c], S[c])
                if _window_empty(dim, lo, hi, pmin, pmax, m, M):
                    if exit_mode:
                        if not straddle:
                            _block_times(key, gam, blk, t0, t1, times)
                        tau = times[k]
                    done = True
                    break
            t0 = t1
            blk += 1
            if not done and jidx >= max_jumps:
                overflow += 1
                done = True
        while h < H:
            for c in range(dim):
                out_min[p, h, c] = m[c]
                out_max[p, h, c] = M[c]
            h += 1
        out_tau[p] = tau
        for c in range(dim):
            out_pos[p, c] = S[c]
        out_jumps[p] = jidx
    return overflow


@nb.njit(nogil=True)
def draw_jumps(seed, n, dim, rtab, out):
    """``n`` independent jump displacements (one per path index, jump 0)."""
    for p in range(n):
        key, gam = path_key(seed, p)
        z0 = _draw(key, gam, 0, 0)
        r = _lookup(z0 | np.uint64(1), rtab)
        if dim == 1:
            out[p, 0] = -r if (z0 & np.uint64(1)) else r
        else:
            phi = _TWO_PI * _unit(_draw(key, gam, 1, 0))
            out[p, 0] = r * math.cos(phi)
            out[p, 1] = r * math.sin(phi)


def table_abscissae() -> np.ndarray:
    """The ``u`` values at which lookup tables must be tabulated."""
    e = np.arange(TABLE_EXP + 1)[:, None]
    j = np.arange(TABLE_BINS + 1)[None, :]
    return 2.0 ** (-(e + 1.0)) * (1.0 + j / TABLE_BINS)
