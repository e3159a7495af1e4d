"""Shortcut metrics on Ahlfors-regular spaces: construction, truncated distances and numerical checks."""

from .group_core import HPoint, VerticalNorm, box_distance, dilate, inv, mul, vertical_cc

__all__ = [
    "HPoint",
    "VerticalNorm",
    "box_distance",
    "dilate",
    "inv",
    "mul",
    "vertical_cc",
]
