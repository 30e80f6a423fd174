"""Memristor state equations and explicit Euler stepping.

The state ``w`` is normalized: 0 is fully OFF (``R_off``), 1 fully ON
(``R_on``). All three models use the same sign convention: a positive drive
(current for TEAM, voltage for VTEAM and Knowm) pushes ``w`` toward 1.
No window function is applied; ``w`` is clamped to [0, 1] after every step.

The scalar rate functions are compiled with numba so the circuit kernel in
:mod:`memosim._kernel` and the per-device API below share one implementation.
"""

from __future__ import annotations

import configparser
import enum
import hashlib
import math
import os
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np
from numba import njit

from .errors import NonFiniteState, ParseError

PARAMS_ENV = "MEMOS_PARAMS"


class ModelKind(enum.Enum):
    TEAM = "team"
    VTEAM = "vteam"
    KNOWM = "knowm"
    KNOWM_STOCHASTIC = "knowm-stochastic"

    @classmethod
    def parse(cls, text: str) -> "ModelKind":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown model {text!r}; choose from {[m.value for m in cls]}") from None

    @property
    def section(self) -> str:
        return "knowm" if self in (ModelKind.KNOWM, ModelKind.KNOWM_STOCHASTIC) else self.value


# integer codes used inside compiled kernels
TEAM_CODE, VTEAM_CODE, KNOWM_CODE = 0, 1, 2
LINEAR_MAP, EXPONENTIAL_MAP = 0, 1


def _check_resistances(r_on, r_off, r_map):
    if not r_off > r_on > 0:
        raise ValueError(f"need R_off > R_on > 0, got R_on={r_on}, R_off={r_off}")
    if r_map not in ("linear", "exponential"):
        raise ValueError(f"r_map must be 'linear' or 'exponential', got {r_map!r}")


@dataclass(frozen=True)
class TeamParams:
    """Current-threshold model. ``k_on`` is a magnitude: below ``i_on`` the rate is ``-k_on * (...)``."""

    k_on: float
    k_off: float
    alpha_on: float
    alpha_off: float
    i_on: float
    i_off: float
    r_on: float
    r_off: float
    r_map: str = "linear"

    def __post_init__(self):
        _check_resistances(self.r_on, self.r_off, self.r_map)
        if not self.i_on < 0 < self.i_off:
            raise ValueError("TEAM thresholds need i_on < 0 < i_off")
        if self.k_on < 0 or self.k_off < 0:
            raise ValueError("rate constants are magnitudes and must be >= 0")

    def packed(self) -> np.ndarray:
        return np.array(
            [TEAM_CODE, self.r_on, self.r_off, _map_code(self.r_map),
             self.k_on, self.k_off, self.alpha_on, self.alpha_off, self.i_on, self.i_off],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class VteamParams:
    """Voltage-threshold analogue of :class:`TeamParams`."""

    k_on: float
    k_off: float
    alpha_on: float
    alpha_off: float
    v_on: float
    v_off: float
    r_on: float
    r_off: float
    r_map: str = "linear"

    def __post_init__(self):
        _check_resistances(self.r_on, self.r_off, self.r_map)
        if not self.v_on < 0 < self.v_off:
            raise ValueError("VTEAM thresholds need v_on < 0 < v_off")
        if self.k_on < 0 or self.k_off < 0:
            raise ValueError("rate constants are magnitudes and must be >= 0")

    def packed(self) -> np.ndarray:
        return np.array(
            [VTEAM_CODE, self.r_on, self.r_off, _map_code(self.r_map),
             self.k_on, self.k_off, self.alpha_on, self.alpha_off, self.v_on, self.v_off],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class KnowmParams:
    """Mean-field metastable-switch model.

    ``v_on`` and ``v_off`` are the positive barrier voltages for the OFF->ON and
    ON->OFF transitions, ``t_c`` the characteristic switching time and ``v_t``
    the thermal voltage. ``n_mss`` switches are sampled in the stochastic variant.
    """

    g_on: float
    g_off: float
    v_on: float
    v_off: float
    t_c: float
    v_t: float
    n_mss: int = 1000
    r_map: str = "linear"

    def __post_init__(self):
        if not self.g_on > self.g_off > 0:
            raise ValueError("need G_on > G_off > 0")
        _check_resistances(self.r_on, self.r_off, self.r_map)
        if self.t_c <= 0 or self.v_t <= 0:
            raise ValueError("t_c and v_t must be positive")
        if self.n_mss < 1:
            raise ValueError("n_mss must be >= 1")

    @property
    def r_on(self) -> float:
        return 1.0 / self.g_on

    @property
    def r_off(self) -> float:
        return 1.0 / self.g_off

    def packed(self) -> np.ndarray:
        return np.array(
            [KNOWM_CODE, self.r_on, self.r_off, _map_code(self.r_map),
             self.t_c, self.v_on, self.v_off, self.v_t, 0.0, 0.0],
            dtype=np.float64,
        )


_PARAM_TYPES = {"team": TeamParams, "vteam": VteamParams, "knowm": KnowmParams}


def _map_code(r_map):
    return LINEAR_MAP if r_map == "linear" else EXPONENTIAL_MAP


# -- compiled scalar physics -------------------------------------------------

@njit(cache=True, nogil=True)
def _pow(x, a):
    # small integer exponents by multiplication; libm pow dominates the kernel otherwise
    n = int(a)
    if n == a and 0 <= n <= 16:
        out = 1.0
        for _ in range(n):
            out *= x
        return out
    return x ** a


@njit(cache=True, nogil=True)
def _threshold_rate(x, k_on, k_off, a_on, a_off, x_on, x_off):
    # boundary values belong to the dead zone
    if x > x_off:
        return k_off * _pow(x / x_off - 1.0, a_off)
    if x < x_on:
        return -k_on * _pow(x / x_on - 1.0, a_on)
    return 0.0


@njit(cache=True, nogil=True)
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


@njit(cache=True, nogil=True)
def _knowm_probs(v, v_on, v_off, v_t):
    """Per-switch transition propensities (OFF->ON, ON->OFF) at bias ``v``."""
    return _sigmoid((v - v_on) / v_t), _sigmoid(-(v + v_off) / v_t)


@njit(cache=True, nogil=True)
def _knowm_rate(w, v, t_c, v_on, v_off, v_t):
    p_on, p_off = _knowm_probs(v, v_on, v_off, v_t)
    return ((1.0 - w) * p_on - w * p_off) / t_c


@njit(cache=True, nogil=True)
def _rate(prm, w, v, i):
    code = int(prm[0])
    if code == TEAM_CODE:
        return _threshold_rate(i, prm[4], prm[5], prm[6], prm[7], prm[8], prm[9])
    if code == VTEAM_CODE:
        return _threshold_rate(v, prm[4], prm[5], prm[6], prm[7], prm[8], prm[9])
    return _knowm_rate(w, v, prm[4], prm[5], prm[6], prm[7])


@njit(cache=True, nogil=True)
def _resistance(prm, w):
    r_on, r_off = prm[1], prm[2]
    if prm[3] == LINEAR_MAP:
        return r_off + w * (r_on - r_off)
    return r_off * (r_on / r_off) ** w


@njit(cache=True, nogil=True)
def _clamp01(w):
    if w < 0.0:
        return 0.0
    if w > 1.0:
        return 1.0
    return w


# -- Python-level API --------------------------------------------------------

def dwdt_team(w: float, i: float, p: TeamParams) -> float:
    return float(_threshold_rate(i, p.k_on, p.k_off, p.alpha_on, p.alpha_off, p.i_on, p.i_off))


def dwdt_vteam(w: float, v: float, p: VteamParams) -> float:
    return float(_threshold_rate(v, p.k_on, p.k_off, p.alpha_on, p.alpha_off, p.v_on, p.v_off))


def dwdt_knowm(w: float, v: float, p: KnowmParams) -> float:
    return float(_knowm_rate(w, v, p.t_c, p.v_on, p.v_off, p.v_t))


def knowm_update(w: float, v: float, dt: float, p: KnowmParams, rng: np.random.Generator | None = None) -> float:
    """One Knowm step. Without ``rng`` the mean-field update is used; with it,
    the OFF->ON and ON->OFF switch counts are drawn binomially over ``p.n_mss``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if rng is None:
        return float(_clamp01(w + dt * _knowm_rate(w, v, p.t_c, p.v_on, p.v_off, p.v_t)))
    p_on, p_off = _knowm_probs(v, p.v_on, p.v_off, p.v_t)
    scale = dt / p.t_c
    n_on = int(round(w * p.n_mss))
    gained = rng.binomial(p.n_mss - n_on, min(1.0, scale * p_on))
    lost = rng.binomial(n_on, min(1.0, scale * p_off))
    return (n_on + gained - lost) / p.n_mss


def memristance(w: float, p) -> float:
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"state {w} outside [0, 1]")
    return float(_resistance(p.packed(), w))


def conductance(w: float, p) -> float:
    return 1.0 / memristance(w, p)


@dataclass
class StepResult:
    w: float
    current: float
    energy: float


class MemristorDevice:
    """A single memristor with mutable state.

    Parameters
    ----------
    model : ModelKind
    params : TeamParams, VteamParams or KnowmParams
        Must match ``model``.
    w : float
        Initial state, 0.5 by default (the reset state).
    seed, device_id : int
        Select the per-device random stream of the stochastic Knowm variant.
    """

    def __init__(self, model: ModelKind, params, w: float = 0.5, seed: int = 0, device_id: int = 0):
        expected = _PARAM_TYPES[model.section]
        if not isinstance(params, expected):
            raise TypeError(f"{model.value} needs {expected.__name__}, got {type(params).__name__}")
        self.model = model
        self.params = params
        self.w = float(w)
        self._packed = params.packed()
        self.rng = None
        if model is ModelKind.KNOWM_STOCHASTIC:
            self.rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, device_id])))

    def __repr__(self):
        return f"MemristorDevice({self.model.value}, w={self.w:.6g})"

    @property
    def resistance(self) -> float:
        return float(_resistance(self._packed, self.w))

    def reset(self):
        self.w = 0.5

    def euler_step(self, v_applied: float, dt: float) -> StepResult:
        """Advance by ``dt`` under terminal voltage ``v_applied``.

        Current and energy are evaluated at the start-of-step state.
        """
        if dt <= 0:
            raise ValueError("dt must be positive")
        r = self.resistance
        i = v_applied / r
        if self.rng is not None:
            w_new = knowm_update(self.w, v_applied, dt, self.params, self.rng)
        else:
            w_new = self.w + dt * float(_rate(self._packed, self.w, v_applied, i))
        if not math.isfinite(w_new):
            raise NonFiniteState(f"state became {w_new} (dt={dt:g}, v={v_applied:g})")
        self.w = min(1.0, max(0.0, w_new))
        return StepResult(self.w, i, v_applied * i * dt)


def euler_step(d: MemristorDevice, v_applied: float, dt: float) -> StepResult:
    return d.euler_step(v_applied, dt)


def reset(d: MemristorDevice):
    d.reset()


# -- parameter files ---------------------------------------------------------

@dataclass(frozen=True)
class ParamSet:
    team: TeamParams
    vteam: VteamParams
    knowm: KnowmParams
    source: str
    hash: str

    def for_model(self, model: ModelKind):
        return getattr(self, model.section)

    def replace(self, **sections) -> "ParamSet":
        """Copy with some sections swapped; the hash is recomputed from the rendered text."""
        merged = {"team": self.team, "vteam": self.vteam, "knowm": self.knowm, **sections}
        text = render_params(merged)
        return ParamSet(**merged, source="<derived>", hash=_digest(text.encode()))


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def _convert(cls, name, raw, lineno=None):
    ftype = {f.name: f.type for f in fields(cls)}[name]
    try:
        if ftype in ("int", int):
            return int(raw)
        if ftype in ("str", str):
            return raw.strip()
        return float(raw)
    except ValueError:
        raise ParseError(f"bad value {raw!r} for {name}", lineno) from None


def parse_params(text: str, source: str = "<string>") -> ParamSet:
    """Parse a sectioned ``key = value`` parameter file (SI units)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ParseError(str(exc), getattr(exc, "lineno", None)) from None
    sections = {}
    for name, cls in _PARAM_TYPES.items():
        if not cp.has_section(name):
            raise ParseError(f"missing section [{name}] in {source}")
        known = {f.name for f in fields(cls)}
        values = {}
        for key, raw in cp.items(name):
            if key not in known:
                raise ParseError(f"unknown key {key!r} in [{name}]")
            values[key] = _convert(cls, key, raw)
        try:
            sections[name] = cls(**values)
        except TypeError as exc:
            raise ParseError(f"[{name}]: {exc}") from None
    return ParamSet(**sections, source=source, hash=_digest(text.encode()))


def render_params(sections: dict) -> str:
    out = []
    for name in ("team", "vteam", "knowm"):
        out.append(f"[{name}]")
        out += [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in asdict(sections[name]).items()]
        out.append("")
    return "\n".join(out)


def default_params_text() -> str:
    return resources.files("memosim.data").joinpath("default_params.ini").read_text()


def load_params(path: str | os.PathLike | None = None) -> ParamSet:
    """Load a parameter file; ``$MEMOS_PARAMS`` or the packaged defaults when ``path`` is None."""
    if path is None:
        path = os.environ.get(PARAMS_ENV) or None
    if path is None:
        return parse_params(default_params_text(), source="default_params.ini")
    path = Path(path)
    return parse_params(path.read_text(), source=str(path))
