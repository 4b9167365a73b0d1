"""Exception hierarchy.

Errors are grouped by how the CLI reports them: input problems, category
membership failures, and failures during a computation.
"""


class CmodlabError(Exception):
    """Base class for all library errors."""


class InputError(CmodlabError):
    pass


class ParseError(InputError):
    pass


class BadAugmentationForm(InputError):
    pass


class NotInCategory(CmodlabError):
    def __init__(self, condition: str):
        super().__init__(condition)
        self.condition = condition


class ComputationError(CmodlabError):
    pass


class IllFormedMap(ComputationError):
    pass


class InconsistentStructure(ComputationError):
    pass


class NotRegularCase(ComputationError):
    pass


class TorsionResidue(ComputationError):
    pass


class NotIndependent(ComputationError):
    pass


class DependentResidues(ComputationError):
    pass


class NotRegularElement(ComputationError):
    pass


class NegativeLength(ComputationError):
    pass


class NegativeKernel(ComputationError):
    pass


class HypothesisUntagged(ComputationError):
    pass


class UnsupportedDeformation(ComputationError):
    pass


class InvariantViolation(ComputationError):
    """A structural identity that must hold on every input failed."""


class PrecisionExhausted(ComputationError):
    pass
