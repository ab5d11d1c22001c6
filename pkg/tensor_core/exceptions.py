class ActionHeadError(Exception):
    """Base class for every error raised by the action head."""


class DimensionError(ActionHeadError):
    pass


class ParameterError(ActionHeadError):
    pass


class NonFiniteError(ActionHeadError):
    pass


class GeometryError(ActionHeadError):
    pass


class ContractError(ActionHeadError):
    pass


class ConfigError(ActionHeadError):
    pass


class GenerationError(ActionHeadError):
    pass


class DiagnosticError(ActionHeadError):
    pass


class TrainingDivergedError(ActionHeadError):
    pass


class FormatError(ActionHeadError):
    pass
