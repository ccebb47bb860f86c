"""Smooth approximations of nonsmooth losses and their metadata."""
from .base import SAMeta, SmoothedObjective, QuadraticSmooth
from .nesterov import huber, softmax_smooth, softmax_meta, HuberRobust, HuberAbs, SoftmaxMax, DualSmoothed
from .moreau import (
    moreau_params,
    moreau_error_bound,
    moreau_envelope,
    prox_abs_quadratic,
    prox_abs_quadratic_rows,
    prox_linear,
    loss_prox,
    MoreauRobust,
    MoreauAbs,
)
from .combinators import (
    SumSmoothed,
    FiniteSumSmoothed,
    MinibatchOracle,
    combine_sum,
    combine_minibatch,
    smooth_losses,
    OuterFunction,
    IdentityOuter,
    PositivePartOuter,
    compose_convex_outer,
    precompose_linear,
)


def make_smoothed(problem, smoother: str, eta: float) -> SmoothedObjective:
    """Smoothed objective for a robust regression or max-of-quadratics problem."""
    from ..core import MaxQuadraticProblem, RobustRegressionProblem
    from ..errors import CapabilityError

    if isinstance(problem, RobustRegressionProblem):
        if smoother == "huber":
            return HuberRobust(problem, eta)
        if smoother == "moreau":
            return MoreauRobust(problem, eta)
    if isinstance(problem, MaxQuadraticProblem) and smoother == "softmax":
        return SoftmaxMax(problem, eta)
    raise CapabilityError(f"smoother {smoother!r} does not apply to {type(problem).__name__}")
