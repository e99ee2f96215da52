"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
1 for computation errors, 2 for I/O problems, 3 for bad configuration.
"""


class ElecnetError(Exception):
    exit_code = 1


class NetworkError(ElecnetError):
    """Invalid electrical network data."""


class NonPositiveConductance(NetworkError):
    pass


class SelfLoop(NetworkError):
    pass


class Disconnected(NetworkError):
    pass


class UnknownRoot(NetworkError):
    pass


class UnknownVertex(NetworkError):
    pass


class DuplicateEdge(NetworkError):
    pass


class DomainMismatch(ElecnetError):
    pass


class EmptySet(ElecnetError):
    pass


class FullSet(ElecnetError):
    pass


class RootOutsideB(ElecnetError):
    pass


class NotResistanceMetric(ElecnetError):
    pass


class StartOutsideB(ElecnetError):
    pass


class GridOutOfRange(ElecnetError):
    pass


class DeltaTooLarge(ElecnetError):
    pass


class AlphaOutOfRange(ElecnetError):
    pass


class TooLargeForExact(ElecnetError):
    pass


class TooLarge(ElecnetError):
    pass


class ConfigError(ElecnetError):
    exit_code = 3


class IoError(ElecnetError):
    exit_code = 2
