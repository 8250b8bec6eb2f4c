"""Core optimizer update engines.

Every engine shares one skeleton per round t:

    m_t = beta1_t * m_{t-1} + (1 - beta1_t) * g_t          (momentum)
    V_t = diagonal preconditioner built from past gradients
    x_{t+1} = Project(x_t - alpha_t * m_t / V_t)

They differ only in how V_t is built:

* ``wagmf_step`` keeps the raw weighted sum v_t = sum_i gamma_i |g_i|^p1 and
  normalizes by the running weight sum:  V_t = (v_t / sum_i gamma_i)^(1/p2).
* ``stable_step`` keeps the linearly-weighted average directly,
  v_t = (1 - 2/(t+1)) v_{t-1} + (2/(t+1)) |g_t|^p1,  V_t = v_t^(1/4),
  which equals the wagmf path with gamma_t = t and p2 = 4 but never
  accumulates the O(t^2) raw sum.
* ``generic_step`` covers the EMA family (v_t = beta2 v_{t-1} +
  (1-beta2) g_t^2, with an optional running max for the amsgrad variant),
  the sign update, and plain SGD (V_t = 1).

``epsilon`` is added to V_t after the root.  Odd p1 accumulates |g|^p1 so the
radicand stays non-negative.  Step functions mutate ``state`` in place and
return it; the preconditioner actually applied is left in ``state.last_V``
with the step size in ``state.last_alpha`` for tracing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import schedules
from .errors import NonFiniteGradient
from .feasible import FeasibleSet
from .numerics import as_vector, elem_root
from .schedules import MomentumSchedule, StepSizeSchedule, WeightSchedule

ENGINES = ("wagmf_sum", "wagmf_stable", "ema", "amsgrad", "sign", "plain_sgd")


@dataclass(frozen=True)
class OptimizerConfig:
    weight: WeightSchedule
    step: StepSizeSchedule
    momentum: MomentumSchedule
    p1: int = 2
    p2: int = 2
    epsilon: float = 0.0
    engine: str = "wagmf_sum"
    bias_correction: bool = False
    debug_checks: bool = False

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if not (isinstance(self.p1, int) and self.p1 >= 1):
            raise ValueError(f"p1 must be a positive integer, got {self.p1}")
        if not (isinstance(self.p2, int) and self.p2 >= 1):
            raise ValueError(f"p2 must be a positive integer, got {self.p2}")
        if not (self.epsilon >= 0.0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if self.engine == "wagmf_stable":
            if self.weight.kind != "linear" or self.p2 != 4:
                raise ValueError("wagmf_stable requires linear weights and p2 = 4")
        if self.engine in ("ema", "amsgrad") and self.weight.kind != "exponential":
            raise ValueError(f"{self.engine} engine needs an exponential weight schedule")
        if self.bias_correction and self.engine not in ("ema", "amsgrad"):
            raise ValueError("bias_correction only applies to the ema/amsgrad engines")


@dataclass
class OptimizerState:
    """Mutable per-run state.  Owned by exactly one run; steps mutate it."""

    t: int
    x: np.ndarray
    m: np.ndarray
    v: np.ndarray
    weight_sum: float
    v_hat: np.ndarray | None = None
    last_V: np.ndarray | None = None
    last_alpha: float = 0.0


def init_state(x0, cfg: OptimizerConfig) -> OptimizerState:
    x = np.array(as_vector(x0), copy=True)
    d = x.shape[0]
    v_hat = np.zeros(d) if cfg.engine == "amsgrad" else None
    return OptimizerState(t=0, x=x, m=np.zeros(d), v=np.zeros(d), weight_sum=0.0, v_hat=v_hat)


def _check_grad(g: np.ndarray) -> None:
    if not np.isfinite(g).all():
        raise NonFiniteGradient("gradient contains NaN or Inf")


def _gpow(g: np.ndarray, p1: int) -> np.ndarray:
    if p1 == 2:
        return g * g
    if p1 % 2 == 0:
        return np.power(g, p1)
    return np.power(np.abs(g), p1)


def _root(v: np.ndarray, p2: int) -> np.ndarray:
    if p2 == 2:
        return np.sqrt(v)
    if p2 == 4:
        return np.sqrt(np.sqrt(v))
    return elem_root(v, p2)


def _momentum(state: OptimizerState, g: np.ndarray, mom: MomentumSchedule, t: int) -> np.ndarray:
    b1t = mom.beta1 if mom.lam == 1.0 else mom.beta1 * mom.lam ** (t - 1)
    m = state.m
    m *= b1t
    m += (1.0 - b1t) * g
    return m


def _descend(state, m_eff, V, a_t, eps, fset: FeasibleSet) -> None:
    # with eps = 0 an untouched coordinate has V = 0, but then m = 0 too:
    # leave it in place instead of producing 0/0
    if eps:
        step_vec = m_eff / V
    else:
        step_vec = np.divide(m_eff, V, out=np.zeros_like(m_eff), where=V > 0.0)
    x = state.x
    x -= a_t * step_vec
    if fset.is_box:
        np.clip(x, fset.lo, fset.hi, out=x)


def wagmf_step(
    state: OptimizerState, g: np.ndarray, cfg: OptimizerConfig, fset: FeasibleSet
) -> OptimizerState:
    """One round of the weighted-sum engine (gamma_t from cfg.weight)."""
    if cfg.engine != "wagmf_sum":
        raise ValueError(f"wagmf_step called with engine {cfg.engine!r}")
    _check_grad(g)
    t = state.t + 1
    m = _momentum(state, g, cfg.momentum, t)
    gam = schedules.gamma(cfg.weight, t)
    v = state.v
    v += gam * _gpow(g, cfg.p1)
    prev_ws = state.weight_sum
    ws = prev_ws + gam
    V = _root(v * (1.0 / ws), cfg.p2)
    if cfg.epsilon:
        V += cfg.epsilon
    a_t = schedules.alpha(cfg.step, t)
    if cfg.debug_checks and t >= 2:
        a_prev = schedules.alpha(cfg.step, t - 1)
        assert schedules.check_nonincrease(1.0 / prev_ws, 1.0 / ws, a_prev, a_t, cfg.p2)
    _descend(state, m, V, a_t, cfg.epsilon, fset)
    state.t = t
    state.weight_sum = ws
    state.last_V = V
    state.last_alpha = a_t
    return state


def stable_step(
    state: OptimizerState, g: np.ndarray, cfg: OptimizerConfig, fset: FeasibleSet
) -> OptimizerState:
    """One round of the normalized recursion for linear weights and p2 = 4."""
    if cfg.engine != "wagmf_stable":
        raise ValueError(f"stable_step called with engine {cfg.engine!r}")
    _check_grad(g)
    t = state.t + 1
    m = _momentum(state, g, cfg.momentum, t)
    c = 2.0 / (t + 1.0)
    v = state.v
    v *= 1.0 - c
    v += c * _gpow(g, cfg.p1)
    V = np.sqrt(np.sqrt(v))
    if cfg.epsilon:
        V += cfg.epsilon
    a_t = schedules.alpha(cfg.step, t)
    if cfg.debug_checks and t >= 2:
        # implied balance term for gamma_i = i is b_t = 2 / (t (t+1))
        a_prev = schedules.alpha(cfg.step, t - 1)
        b_prev = 2.0 / ((t - 1.0) * t)
        b_curr = 2.0 / (t * (t + 1.0))
        assert schedules.check_nonincrease(b_prev, b_curr, a_prev, a_t, 4)
    _descend(state, m, V, a_t, cfg.epsilon, fset)
    state.t = t
    state.weight_sum = state.weight_sum + t
    state.last_V = V
    state.last_alpha = a_t
    return state


def generic_step(
    state: OptimizerState, g: np.ndarray, cfg: OptimizerConfig, fset: FeasibleSet
) -> OptimizerState:
    """One round of the EMA family (ema/amsgrad), sign update, or plain SGD."""
    eng = cfg.engine
    if eng not in ("ema", "amsgrad", "sign", "plain_sgd"):
        raise ValueError(f"generic_step called with engine {eng!r}")
    _check_grad(g)
    t = state.t + 1
    m = _momentum(state, g, cfg.momentum, t)
    a_t = schedules.alpha(cfg.step, t)
    if eng == "plain_sgd":
        V = np.ones_like(state.x)
        x = state.x
        x -= a_t * m
        if fset.is_box:
            np.clip(x, fset.lo, fset.hi, out=x)
    elif eng == "sign":
        # x - alpha * sign(g) is x - alpha * g / |g| where defined; the
        # effective preconditioner |g_t| is recorded for diagnostics
        V = np.abs(g)
        x = state.x
        x -= a_t * np.sign(g)
        if fset.is_box:
            np.clip(x, fset.lo, fset.hi, out=x)
    else:
        beta2 = cfg.weight.beta2
        v = state.v
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        vv = state.v_hat if eng == "amsgrad" else v
        if eng == "amsgrad":
            np.maximum(vv, v, out=vv)
        m_eff = m
        if cfg.bias_correction:
            vv = vv / (1.0 - beta2**t)
            m_eff = m / (1.0 - cfg.momentum.beta1**t)
        V = np.sqrt(vv)
        if cfg.epsilon:
            V += cfg.epsilon
        _descend(state, m_eff, V, a_t, cfg.epsilon, fset)
    state.t = t
    state.last_V = V
    state.last_alpha = a_t
    return state


STEP_FN = {
    "wagmf_sum": wagmf_step,
    "wagmf_stable": stable_step,
    "ema": generic_step,
    "amsgrad": generic_step,
    "sign": generic_step,
    "plain_sgd": generic_step,
}
