"""Compiled inner loop of the MeMOS circuit simulation.

Gate kinds are integer codes; gates arrive in topological order, so walking
them by index grants every block inputs that were restored in earlier levels.
"""

import math

import numpy as np
from numba import njit

from .devices import KNOWM_CODE, _clamp01, _knowm_probs, _rate, _resistance

K_INPUT, K_CONST, K_NOT, K_NAND, K_NOR = 0, 1, 2, 3, 4

OK, NONFINITE = 0, 1


@njit(cache=True, nogil=True)
def restore(v_in, vdd, invert, prev):
    """Restoring element; returns (output volts, metastable flag)."""
    if v_in > 0.7 * vdd:
        return (0.0 if invert else vdd), False
    if v_in < 0.3 * vdd:
        return (vdd if invert else 0.0), False
    return prev, True


@njit(cache=True, nogil=True)
def _idle(prm, w, b, n_steps, dt):
    """Equal inputs: zero terminal voltage on both devices, no current, no energy.

    Threshold models are in their dead zone. The Knowm mean-field update at
    zero bias is affine in ``w``, so the Euler recursion has the closed form
    ``w_n - w* = (w_0 - w*) * (1 - dt * (p_on + p_off) / t_c) ** n``.
    """
    if int(prm[0]) != KNOWM_CODE:
        return OK
    p_on, p_off = _knowm_probs(0.0, prm[5], prm[6], prm[7])
    lam = dt * (p_on + p_off) / prm[4]
    if lam >= 1.0:
        # per-step factor would overshoot; fall back to explicit steps
        for k in range(2):
            x = w[b, k]
            for _ in range(n_steps):
                x = _clamp01(x + dt * ((1.0 - x) * p_on - x * p_off) / prm[4])
            w[b, k] = x
        return OK
    w_star = p_on / (p_on + p_off)
    decay = (1.0 - lam) ** n_steps
    for k in range(2):
        w[b, k] = _clamp01(w_star + (w[b, k] - w_star) * decay)
    return OK


@njit(cache=True, nogil=True)
def integrate_block(prm, pol, v1, v2, w, b, n_steps, dt):
    """Euler-integrate block ``b`` (devices ``w[b, 0]``, ``w[b, 1]``) for one window.

    Returns (final node volts, energy J, status).
    """
    w1 = w[b, 0]
    w2 = w[b, 1]
    if v1 == v2:
        return v1, 0.0, _idle(prm, w, b, n_steps, dt)
    energy = 0.0
    for s in range(n_steps):
        g1 = 1.0 / _resistance(prm, w1)
        g2 = 1.0 / _resistance(prm, w2)
        vn = v1 + (v2 - v1) * (g2 / (g1 + g2))
        d1 = v1 - vn
        d2 = v2 - vn
        i1 = d1 * g1
        i2 = d2 * g2
        e_step = (d1 * i1 + d2 * i2) * dt
        energy += e_step
        n1 = w1 + dt * _rate(prm, w1, pol * d1, pol * i1)
        n2 = w2 + dt * _rate(prm, w2, pol * d2, pol * i2)
        if not (math.isfinite(n1) and math.isfinite(n2)):
            w[b, 0] = w1
            w[b, 1] = w2
            return vn, energy, NONFINITE
        n1 = _clamp01(n1)
        n2 = _clamp01(n2)
        if n1 == w1 and n2 == w2:
            # fixed point (clamped or dead zone): the remaining steps repeat this one
            energy += (n_steps - s - 1) * e_step
            break
        w1 = n1
        w2 = n2
    w[b, 0] = w1
    w[b, 1] = w2
    g1 = 1.0 / _resistance(prm, w1)
    g2 = 1.0 / _resistance(prm, w2)
    return v1 + (v2 - v1) * (g2 / (g1 + g2)), energy, OK


@njit(cache=True, nogil=True)
def run_stream(kind, fan0, fan1, block, pol, input_col, out_gates, bits,
               static, n_steps, dt, v_drive, vdd, prm, w, prev, inv_energy):
    """Evaluate a stream of input vectors.

    ``bits[k, j]`` drives input column ``j`` for pair ``k``. Device states ``w``
    and restoring-element memories ``prev`` are updated in place and carry over
    between pairs unless ``static`` is set.

    Returns (output bits, energy per pair, metastable flag per pair, status).
    """
    n_pairs = bits.shape[0]
    n_gates = kind.shape[0]
    out = np.zeros((n_pairs, out_gates.shape[0]), dtype=np.uint8)
    energy = np.zeros(n_pairs)
    meta = np.zeros(n_pairs, dtype=np.bool_)
    vol = np.zeros(n_gates)
    for k in range(n_pairs):
        if static:
            w[:, :] = 0.5
            prev[:] = 0.0
        e_pair = 0.0
        flagged = False
        for g in range(n_gates):
            kg = kind[g]
            if kg == K_INPUT:
                vol[g] = v_drive if bits[k, input_col[g]] else 0.0
            elif kg == K_CONST:
                vol[g] = vdd if input_col[g] else 0.0
            elif kg == K_NOT:
                v, m = restore(vol[fan0[g]], vdd, True, prev[g])
                if v != prev[g]:
                    e_pair += inv_energy
                vol[g] = v
                prev[g] = v
                flagged = flagged or m
            else:
                vn, e_blk, status = integrate_block(prm, pol[g], vol[fan0[g]], vol[fan1[g]],
                                                    w, block[g], n_steps, dt)
                if status != OK:
                    return out, energy, meta, status
                e_pair += e_blk
                v, m = restore(vn, vdd, True, prev[g])
                if v != prev[g]:
                    e_pair += inv_energy
                vol[g] = v
                prev[g] = v
                flagged = flagged or m
        for j in range(out_gates.shape[0]):
            out[k, j] = 1 if vol[out_gates[j]] > 0.0 else 0
        energy[k] = e_pair
        meta[k] = flagged
    return out, energy, meta, OK
