"""Exception types raised by metriplex."""


class MetriplexError(Exception):
    """Base class for all library errors."""


class NonFiniteEvaluation(MetriplexError):
    def __init__(self, coordinate, value=None):
        self.coordinate = coordinate
        self.value = value
        super().__init__(f"non-finite evaluation while perturbing coordinate {coordinate} (value={value!r})")


class HyperregularityFailure(MetriplexError):
    """Newton iteration for the fiber derivative did not converge."""


class NoCompartments(MetriplexError):
    pass


class ZeroTemperature(MetriplexError):
    def __init__(self, temperature, state=None, t=None):
        self.temperature = temperature
        self.state = state
        self.t = t
        where = "" if t is None else f" at t={t:.6g}"
        super().__init__(f"|dH/dS| = {abs(temperature):.3e} below temperature floor{where}")


class DivergedAt(MetriplexError):
    def __init__(self, t, reason="non-finite state"):
        self.t = t
        super().__init__(f"{reason} at t={t:.6g}")


class NegativeMoles(DivergedAt):
    def __init__(self, t, index):
        self.index = index
        super().__init__(t, reason=f"mole number N_{index + 1} crossed zero")


class MissingLinearTransport(MetriplexError):
    pass


class GradientMismatch(MetriplexError):
    """Analytic gradient disagrees with central finite differences."""


class InvalidSystem(MetriplexError, ValueError):
    pass


class DimensionMismatch(MetriplexError, ValueError):
    pass


class UnknownScenario(MetriplexError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown scenario"


class InvalidParameter(MetriplexError, ValueError):
    pass
