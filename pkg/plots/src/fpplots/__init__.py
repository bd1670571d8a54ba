"""Figures for learning-run trajectory logs."""

from .render import PlotSpec, SchemaError, build_figure, render_trajectories

__version__ = "0.1.0"
