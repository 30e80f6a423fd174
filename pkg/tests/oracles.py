"""Independent reference implementations used to derive frozen test values.

Nothing here imports memosim; the device laws and the divider/Euler loop are
re-derived from their definitions in plain Python floats.
"""

import itertools
import math


def sd_value(msb_first):
    """Integer value of an msb-first digit sequence."""
    v = 0
    for d in msb_first:
        v = 2 * v + d
    return v


def all_words(width):
    return list(itertools.product((-1, 0, 1), repeat=width))


def team_rate(i, k_on, k_off, a_on, a_off, i_on, i_off):
    if i > i_off:
        return k_off * (i / i_off - 1.0) ** a_off
    if i < i_on:
        return -k_on * (i / i_on - 1.0) ** a_on
    return 0.0


def knowm_rate(w, v, t_c, v_on, v_off, v_t):
    p_on = 1.0 / (1.0 + math.exp(-(v - v_on) / v_t))
    p_off = 1.0 / (1.0 + math.exp((v + v_off) / v_t))
    return ((1.0 - w) * p_on - w * p_off) / t_c


def linear_r(w, r_on, r_off):
    return r_off + w * (r_on - r_off)


def team_block(pol, v1, v2, w1, w2, n_steps, dt, k, alpha, i_on, i_off, r_on, r_off):
    """Two TEAM devices meeting at a divider node, forward Euler.

    Returns (final node volts, final w1, final w2, energy).
    """
    energy = 0.0
    for _ in range(n_steps):
        g1, g2 = 1 / linear_r(w1, r_on, r_off), 1 / linear_r(w2, r_on, r_off)
        vn = (g1 * v1 + g2 * v2) / (g1 + g2)
        c1, c2 = (v1 - vn) * g1, (v2 - vn) * g2
        energy += ((v1 - vn) * c1 + (v2 - vn) * c2) * dt
        w1 = min(1.0, max(0.0, w1 + dt * team_rate(pol * c1, k, k, alpha, alpha, i_on, i_off)))
        w2 = min(1.0, max(0.0, w2 + dt * team_rate(pol * c2, k, k, alpha, alpha, i_on, i_off)))
    g1, g2 = 1 / linear_r(w1, r_on, r_off), 1 / linear_r(w2, r_on, r_off)
    return (g1 * v1 + g2 * v2) / (g1 + g2), w1, w2, energy
