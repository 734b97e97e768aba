import math

import numpy as np

from ..core.tensor import Array
from ..exceptions import DimensionError, PrivacyParameterError, UndefinedBoundError
from .mechanism import check_eta, is_infinite


def log_density_ratio(x: Array, x_prime: Array, y: Array, eta: float) -> float:
    """
    log( p(y | x) / p(y | x') ) for the Laplacian mechanism, which is
    η(‖y - x'‖ - ‖y - x‖). It never exceeds η‖x - x'‖.
    """

    check_eta(eta)
    if is_infinite(eta):
        raise PrivacyParameterError("the density ratio is undefined without noise")
    x, x_prime, y = (np.asarray(v, dtype=np.float64) for v in (x, x_prime, y))
    if not x.shape == x_prime.shape == y.shape:
        raise DimensionError(f"shapes differ: {x.shape}, {x_prime.shape}, {y.shape}")
    return float(eta * (np.linalg.norm(y - x_prime) - np.linalg.norm(y - x)))


def server_mse_lower_bound(eta: float, b_x: float, diam_sq_sum: float, k: int) -> float:
    """
    Lower bound on the MSE of any denoiser run by the server:
    (diam_sq_sum / 4k) / (exp(η·B_x) - 1).
    """

    check_eta(eta)
    if not (b_x > 0 and diam_sq_sum > 0 and k > 0):
        raise PrivacyParameterError(
            f"b_x, diam_sq_sum and k must be positive, got {b_x}, {diam_sq_sum}, {k}"
        )
    exponent = eta * b_x
    if exponent == 0.0:
        raise UndefinedBoundError("eta * b_x underflows to zero")
    try:
        denominator = math.expm1(exponent)
    except OverflowError:
        return 0.0
    return (diam_sq_sum / (4.0 * k)) / denominator
