class MigrationLabError(Exception):
    """Base class for every error raised by the filemigration library."""


class MetricStructureError(MigrationLabError):
    """Distance matrix is malformed (non-square, negative, disconnected graph)."""


class InvalidPointError(MigrationLabError):
    """A point id does not belong to the space."""


class EmptyMultisetError(MigrationLabError):
    pass


class PathError(MigrationLabError):
    """Bracket path with two consecutive multisets and the pair extension off."""


class InstanceError(MigrationLabError):
    pass


class PhaseError(MigrationLabError):
    """A phase precondition does not hold."""


class PolicyError(MigrationLabError):
    pass


class LpModelError(MigrationLabError):
    pass


class LpFormatError(MigrationLabError):
    pass


class SolverError(MigrationLabError):
    pass


class PlayStateError(MigrationLabError):
    """A lower-bound play was started from a state it does not accept."""


class NonCompetitivePolicyError(MigrationLabError):
    """The policy never reached the position of OPT in a finishing play."""

    def __init__(self, message, phases=0, c_alg=0.0):
        super().__init__(message)
        self.phases = phases
        self.c_alg = c_alg
