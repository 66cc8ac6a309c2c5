from .figures import (PlotInputError, build_convergence_figure,
                      build_scenario_figure, plot_convergence, plot_scenario)

__all__ = ["PlotInputError", "build_convergence_figure",
           "build_scenario_figure", "plot_convergence", "plot_scenario"]
