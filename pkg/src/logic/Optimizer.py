# Optimizer.py
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from logic.TrainConfig import OptimizerKind, TrainConfig
from logic.errors import ContractError


@dataclass
class OptimizerState:
    """
    更新則ごとの状態。slots は名前 → パラメータと同形状の配列リスト。
    """

    step: int = 0
    slots: Dict[str, List[np.ndarray]] = field(default_factory=dict)


SLOT_NAMES = {
    OptimizerKind.SGD: (),
    OptimizerKind.ADAGRAD: ("accum",),
    OptimizerKind.ADADELTA: ("accum_grad", "accum_update"),
    OptimizerKind.ADAM: ("m", "v"),
}


def make_state(
    kind: OptimizerKind, params: Sequence[np.ndarray]
) -> OptimizerState:
    return OptimizerState(
        step=0,
        slots={
            name: [np.zeros_like(p) for p in params]
            for name in SLOT_NAMES[OptimizerKind(kind)]
        },
    )


def _check_shapes(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: OptimizerState,
) -> None:
    if len(params) != len(grads):
        raise ContractError(
            f"params ({len(params)}) と grads ({len(grads)}) の数が違います。"
        )
    for i, (p, g) in enumerate(zip(params, grads)):
        if np.shape(p) != np.shape(g):
            raise ContractError(
                f"パラメータ {i} の形状 {np.shape(p)} と勾配の形状 "
                f"{np.shape(g)} が一致しません。"
            )
    for name, slot in state.slots.items():
        if len(slot) != len(params) or any(
            s.shape != np.shape(p) for s, p in zip(slot, params)
        ):
            raise ContractError(f"状態 {name} の形状が一致しません。")


# --- 更新則 (すべて要素ごと・パラメータ配列をその場で更新) ---
def step_sgd(
    params: List[np.ndarray],
    grads: Sequence[np.ndarray],
    state: OptimizerState,
    cfg: TrainConfig,
) -> Tuple[List[np.ndarray], OptimizerState]:
    """θ ← θ − η·g"""
    _check_shapes(params, grads, state)
    for p, g in zip(params, grads):
        p -= cfg.learning_rate * g
    state.step += 1
    return params, state


def step_adagrad(
    params: List[np.ndarray],
    grads: Sequence[np.ndarray],
    state: OptimizerState,
    cfg: TrainConfig,
) -> Tuple[List[np.ndarray], OptimizerState]:
    _check_shapes(params, grads, state)
    eps = cfg.optimizer_params.adagrad_eps
    for p, g, acc in zip(params, grads, state.slots["accum"]):
        acc += g * g
        p -= cfg.learning_rate * g / (np.sqrt(acc) + eps)
    state.step += 1
    return params, state


def step_adadelta(
    params: List[np.ndarray],
    grads: Sequence[np.ndarray],
    state: OptimizerState,
    cfg: TrainConfig,
) -> Tuple[List[np.ndarray], OptimizerState]:
    _check_shapes(params, grads, state)
    rho = cfg.optimizer_params.adadelta_decay
    eps = cfg.optimizer_params.adadelta_eps
    rate = cfg.optimizer_params.adadelta_rate
    for p, g, eg, edx in zip(
        params,
        grads,
        state.slots["accum_grad"],
        state.slots["accum_update"],
    ):
        eg *= rho
        eg += (1.0 - rho) * g * g
        delta = -np.sqrt(edx + eps) / np.sqrt(eg + eps) * g
        edx *= rho
        edx += (1.0 - rho) * delta * delta
        p += rate * delta
    state.step += 1
    return params, state


def step_adam(
    params: List[np.ndarray],
    grads: Sequence[np.ndarray],
    state: OptimizerState,
    cfg: TrainConfig,
) -> Tuple[List[np.ndarray], OptimizerState]:
    _check_shapes(params, grads, state)
    b1 = cfg.optimizer_params.adam_beta1
    b2 = cfg.optimizer_params.adam_beta2
    eps = cfg.optimizer_params.adam_eps
    state.step += 1
    t = state.step
    for p, g, m, v in zip(params, grads, state.slots["m"], state.slots["v"]):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return params, state


StepFunction = Callable[
    [List[np.ndarray], Sequence[np.ndarray], OptimizerState, TrainConfig],
    Tuple[List[np.ndarray], OptimizerState],
]

STEP_FUNCTIONS: Dict[OptimizerKind, StepFunction] = {
    OptimizerKind.SGD: step_sgd,
    OptimizerKind.ADAGRAD: step_adagrad,
    OptimizerKind.ADADELTA: step_adadelta,
    OptimizerKind.ADAM: step_adam,
}
