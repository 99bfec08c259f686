"""Contrastive active inference agents: environments, objectives and static analysis."""

from caif._core import (
    GridWorld,
    Reacher,
    efficiency_report,
    info_nce,
    kl_gaussian,
    lambda_returns,
    make_goal_image,
    validate_config,
)

__all__ = [
    "GridWorld",
    "Reacher",
    "efficiency_report",
    "info_nce",
    "kl_gaussian",
    "lambda_returns",
    "make_goal_image",
    "validate_config",
]
