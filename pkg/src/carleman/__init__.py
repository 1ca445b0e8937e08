"""Certified constructions of pathological Denjoy-Carleman functions."""

from flint import ctx as _ctx

from .numerics import DEFAULT_PREC

if _ctx.prec < DEFAULT_PREC:
    _ctx.prec = DEFAULT_PREC

__version__ = "0.1.0"
