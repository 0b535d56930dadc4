# # -----------------------------------------------------------------------------
# # Error kinds raised by the link models, solvers and the command line
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------


class EhLinkError(Exception):
    pass


class InvalidArgumentError(EhLinkError, ValueError):
    pass


class AmbiguityError(EhLinkError, ValueError):
    # stationary distribution is not unique
    pass


class EnergyCausalityError(EhLinkError, RuntimeError):
    # a node tried to spend more energy than it has stored
    pass


class ProtocolStateError(EhLinkError, RuntimeError):
    pass


class DegenerateObservationError(EhLinkError, ValueError):
    pass


class CapacityError(EhLinkError, RuntimeError):
    pass


class ConvergenceError(EhLinkError, RuntimeError):
    def __init__(self, message, iterations=None, span=None):
        super().__init__(message)
        self.iterations = iterations
        self.span = span


class ConsistencyError(EhLinkError, RuntimeError):
    pass


class ConfigError(EhLinkError, ValueError):
    def __init__(self, message, lineNumber=None, path=None):
        location = ""
        if path is not None:
            location += f"{path}"
        if lineNumber is not None:
            location += f":{lineNumber}"
        super().__init__(f"{location}: {message}" if location else message)
        self.lineNumber = lineNumber
        self.path = path


class TrialError(EhLinkError, RuntimeError):
    def __init__(self, message, slot=None, snapshot=None):
        super().__init__(f"slot {slot}: {message} | state {snapshot}")
        self.slot = slot
        self.snapshot = snapshot
