"""Exception types raised across the package."""


class VortexBodyError(Exception):
    pass


class InvalidArgument(VortexBodyError, ValueError):
    pass


class InvalidGeometry(InvalidArgument):
    pass


class DomainError(VortexBodyError, ValueError):
    """An evaluation point lies inside the solid body."""


class SolverFailure(VortexBodyError, RuntimeError):
    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class ResolutionError(InvalidArgument):
    pass


class ConfigError(InvalidArgument):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class StepRejected(VortexBodyError, RuntimeError):
    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class InvariantBreach(VortexBodyError, RuntimeError):
    pass


class InvalidTestFunction(InvalidArgument):
    pass
