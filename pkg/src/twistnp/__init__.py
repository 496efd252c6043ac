"""Exact Newton polygons of twisted L-functions of binomials.

Three independent routes to the same polygons: an assignment-problem
lower bound in exact rationals, classical twisted exponential sums over
finite fields, and a truncated T-adic Dwork operator.  A Hasse-number
certificate decides when the routes must coincide.
"""

from .polygon import Params, Polygon, hodge_polygon, lies_above, lower_bound_polygon

__all__ = [
    "Params",
    "Polygon",
    "hodge_polygon",
    "lower_bound_polygon",
    "lies_above",
]
