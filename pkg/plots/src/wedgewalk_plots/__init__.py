from .figures import (FigureSpec, SchemaError, fit_tail_slope, plot_drift_ratio,
                      plot_phase, plot_survival, render, survival_points,
                      threshold_overlay)

__version__ = "0.1.0"
