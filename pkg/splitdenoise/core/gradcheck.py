import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..exceptions import ContractError
from .params import ParameterStore, backward
from .rng import RngState
from .tensor import Tensor

log = logging.getLogger(__name__)

RELATIVE_ERROR_FLOOR = 1e-12


def grad_check(
    f: Callable[[ParameterStore], Tensor],
    store: ParameterStore,
    step: float = 1e-5,
    samples: int = 100,
    rng: Optional[RngState] = None,
) -> float:
    """
    Compare analytic gradients of `f` against central differences on sampled
    parameter entries and return the largest relative error.

    Every parameter contributes at least one entry; `samples` entries are
    spread evenly across parameters. The relative error of one entry is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
    """

    if step <= 0:
        raise ContractError(f"grad_check step must be positive, got {step}")
    if len(store) == 0:
        raise ContractError("grad_check needs at least one parameter")

    rng = rng or RngState(0)
    analytic = {name: grad.copy() for name, grad in backward(f(store), store).items()}

    per_param = max(1, samples // len(store))
    entries: List[Tuple[str, int]] = []
    for name, tensor in store.items():
        count = min(per_param, tensor.data.size)
        picks = rng.generator.choice(tensor.data.size, size=count, replace=False)
        entries.extend((name, int(index)) for index in np.sort(picks))

    worst = 0.0
    for name, index in entries:
        tensor = store[name]
        original = tensor.data

        shifted = original.copy()
        shifted.flat[index] += step
        tensor.data = shifted
        plus = f(store).item()

        shifted = original.copy()
        shifted.flat[index] -= step
        tensor.data = shifted
        minus = f(store).item()

        tensor.data = original
        numeric = (plus - minus) / (2.0 * step)
        exact = float(analytic[name].flat[index])
        denominator = max(abs(exact), abs(numeric), RELATIVE_ERROR_FLOOR)
        worst = max(worst, abs(exact - numeric) / denominator)

    log.debug("grad_check over %s entries: max relative error %.3e", len(entries), worst)
    return worst
