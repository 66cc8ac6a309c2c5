"""Exception types shared across the solver.

The CLI maps these onto process exit codes: config errors exit 2,
invariant violations exit 3, numerical failures (NaN/Inf) exit 4.
"""


class ConfigError(ValueError):
    """Invalid configuration file or command-line flags."""


class InvariantViolation(RuntimeError):
    """A certified property of the scheme failed at runtime."""

    def __init__(self, message, cell=None, step=None):
        if cell is not None or step is not None:
            where = ", ".join(
                s for s in (f"cell {cell}" if cell is not None else "",
                            f"step {step}" if step is not None else "") if s
            )
            message = f"{message} ({where})"
        super().__init__(message)
        self.cell = cell
        self.step = step


class WeakPositivityViolated(InvariantViolation):
    """A candidate cell average left the admissible set."""


class BudgetBelowAverageEntropy(InvariantViolation):
    """Entropy budget is smaller than the entropy of the cell average."""


class CflViolation(InvariantViolation):
    """Time step too large for the certified CFL condition."""


class NumericalFailure(RuntimeError):
    """NaN or Inf detected in the solution."""
