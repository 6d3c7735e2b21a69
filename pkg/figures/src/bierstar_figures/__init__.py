"""Figure rendering for the constellation-multicast evaluation CSVs."""

from .render import FIGURE_KINDS, FigureSpec, RenderError, render

__all__ = ["FIGURE_KINDS", "FigureSpec", "RenderError", "render"]
