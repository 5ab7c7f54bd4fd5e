"""Exception hierarchy shared by every module.

Each error carries the name of the module that raised it so the command
line front-end can echo it into the run manifest.
"""


class LabError(Exception):
    module = "bolax"


class ConfigInvalid(LabError):
    module = "cli"


class EmptyCoefficients(LabError):
    module = "potential"


class ZeroLeadingCoefficient(LabError):
    module = "potential"


class ZeroArgument(LabError):
    module = "potential"


class GridTooCoarse(LabError):
    module = "potential"


class NotWeaklyBellShaped(LabError):
    module = "potential"


class TruncationTooSmall(LabError):
    module = "laxspec"


class ConvergenceFailure(LabError):
    module = "laxspec"


class OutOfRangeEta(LabError):
    module = "burgers"


class QuadratureNoConvergence(LabError):
    module = "burgers"


class BranchCountEven(LabError):
    module = "burgers"


class NotEven(LabError):
    module = "quantize"


class OutOfRegion(LabError):
    module = "quantize"


class InsufficientLadder(LabError):
    module = "quantize"


class DegenerateCriticalPoints(LabError):
    module = "landscape"


class RootPolishFailure(LabError):
    module = "landscape"


class OnBranchCut(LabError):
    module = "landscape"


class MalformedTree(LabError):
    module = "landscape"


class BranchCutCrossing(LabError):
    module = "evans"


class PhaseUnwrapAmbiguity(LabError):
    module = "evolve"


class BlowupDetected(LabError):
    module = "evolve"
