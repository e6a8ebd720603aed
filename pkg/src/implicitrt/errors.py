"""Exception types shared across the solver suite."""


class TransportError(Exception):
    """Base class for solver-suite errors."""


class ConfigError(TransportError):
    """Bad experiment configuration (carries a line number when parsed from text)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SolverConvergenceError(TransportError):
    """An iterative solve failed to reach its tolerance."""

    def __init__(self, message, step=None, report=None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step
        self.report = report


class IndefiniteOperatorError(TransportError):
    """CG met negative curvature: the operator is not positive definite."""


class SingularOperatorError(TransportError):
    """A collision-shift eigenvalue is zero; the operator cannot be inverted."""


class StiffLimitError(TransportError):
    """eps^2/dt underflowed to zero; the kinetic solve degenerates and the
    caller should use a diffusion-limit solver instead."""


class CflError(TransportError):
    """Explicit step rejected; carries the largest admissible time step."""

    def __init__(self, dt, dt_max):
        super().__init__(
            f"explicit step dt={dt:g} violates the CFL bound; need dt <= {dt_max:g}"
        )
        self.dt_max = dt_max
