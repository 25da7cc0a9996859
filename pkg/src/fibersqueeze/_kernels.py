"""Fused element-wise kernels for the Wigner nonlinear slice.

numba is used when importable (and FIBERSQUEEZE_NO_JIT is unset); the
numpy versions below are the reference and the fallback.  Both evaluate
the same formulas, so they differ only by rounding.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _du_numpy(mean, fl, sub):
    cross = 2.0 * (mean.conj() * fl).real
    du = cross + (fl.real**2 + fl.imag**2)
    return du, du - sub


def _rotate_numpy(fl, mean, rot, du, dI, h, g):
    dth = h * (g * du - dI)
    t = dth
    if t.size and np.max(np.abs(t)) < 1e-3:
        t2 = t * t
        e = np.empty(t.shape, complex)
        e.real = t2 * (t2 * (1.0 / 24.0) - 0.5)
        e.imag = t * (1.0 - t2 * (1.0 / 6.0))
    else:
        e = 2j * np.sin(0.5 * t) * np.exp(0.5j * t)
    return rot * (fl + e * (mean + fl))


def _build_jit():
    import numba

    @numba.njit(cache=True)
    def du_jit(mean, fl, sub):
        R, M = fl.shape
        du = np.empty((R, M))
        drive = np.empty((R, M))
        for i in range(R):
            for j in range(M):
                a = fl[i, j]
                m = mean[j]
                v = 2.0 * (m.real * a.real + m.imag * a.imag) + (a.real * a.real + a.imag * a.imag)
                du[i, j] = v
                drive[i, j] = v - sub
        return du, drive

    @numba.njit(cache=True)
    def rotate_jit(fl, mean, rot, du, dI, h, g):
        R, M = fl.shape
        out = np.empty((R, M), np.complex128)
        for i in range(R):
            for j in range(M):
                t = h * (g * du[i, j] - dI[i, j])
                if abs(t) < 1e-3:
                    t2 = t * t
                    er = t2 * (t2 * (1.0 / 24.0) - 0.5)
                    ei = t * (1.0 - t2 * (1.0 / 6.0))
                else:
                    s = 2.0 * math.sin(0.5 * t)
                    er = -s * math.sin(0.5 * t)
                    ei = s * math.cos(0.5 * t)
                a = fl[i, j]
                z = mean[j] + a
                w = a + complex(er * z.real - ei * z.imag, er * z.imag + ei * z.real)
                out[i, j] = rot[j] * w
        return out

    return du_jit, rotate_jit


def _select():
    if os.environ.get("FIBERSQUEEZE_NO_JIT"):
        return _du_numpy, _rotate_numpy, False
    try:
        du, rot = _build_jit()
    except ImportError:
        return _du_numpy, _rotate_numpy, False
    return du, rot, True


intensity_change, kerr_rotate, JIT = _select()
