"""Green kernels, level-set balls and mean-value operators on two Green spaces."""

from mplab.greenmean.base import GridFunction, LevelSetBall, RieszMeasure, mollifier
from mplab.greenmean.disc import DiscreteDisc2D
from mplab.greenmean.interval import ConstantWeight, ExactInterval1D
from mplab.greenmean.ops import (
    RieszDecomposition,
    approximation_chain,
    ball_extent,
    certify_subharmonic,
    green,
    level_ball,
    mean_value,
    monotone_approximation,
    monotone_approximation_closed,
    mr_properties_suite,
    radius_bound,
    representation_check,
    riesz_decompose,
    transfer_factor2,
)

__all__ = [
    "GridFunction",
    "LevelSetBall",
    "RieszMeasure",
    "mollifier",
    "DiscreteDisc2D",
    "ConstantWeight",
    "ExactInterval1D",
    "RieszDecomposition",
    "approximation_chain",
    "ball_extent",
    "certify_subharmonic",
    "green",
    "level_ball",
    "mean_value",
    "monotone_approximation",
    "monotone_approximation_closed",
    "mr_properties_suite",
    "radius_bound",
    "representation_check",
    "riesz_decompose",
    "transfer_factor2",
]
