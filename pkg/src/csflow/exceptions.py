"""Exception types raised across the package."""


class CSFError(Exception):
    """Base class for all csflow errors."""


class InvalidCurve(CSFError, ValueError):
    """A vertex array violates the curve invariants."""


class DegenerateEdge(InvalidCurve):
    """An edge is too short to carry an arclength parametrization."""


class StepFailure(CSFError, RuntimeError):
    """A flow step produced an invalid curve.

    The partially built trajectory, if any, is attached as ``trajectory``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class InsufficientSnapshots(CSFError, ValueError):
    pass


class WindowTooShort(CSFError, ValueError):
    pass


class InsufficientBlowupData(CSFError, ValueError):
    pass


class DegenerateFrame(CSFError, ValueError):
    pass


class NotNearPlanar(CSFError, ValueError):
    pass


class NoClosure(CSFError, RuntimeError):
    pass


class PointTooFar(CSFError, ValueError):
    pass
