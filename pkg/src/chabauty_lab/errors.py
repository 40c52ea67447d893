"""Error taxonomy shared across the laboratory.

Every failure mode maps onto one of four families so that callers (and the
command line tool) can translate outcomes into exit codes uniformly:

* malformed input / context mismatch  -> exit 2
* resource budget exhausted           -> exit 3
* verified negative result            -> exit 4 (not an exception per se; the
  solvers return structured failure objects, but `SearchFailure` is raised when
  an operation can *only* report by raising)
"""


class ChabautyLabError(Exception):
    """Base class for all library errors."""


class MalformedInputError(ChabautyLabError):
    """Unparseable word/vector/JSON, or a value violating a documented precondition."""


class ContextMismatchError(ChabautyLabError):
    """Two objects from different ambient groups were combined."""


class BudgetExceededError(ChabautyLabError):
    """A vertex/length/enumeration cap was hit before the computation finished.

    Carries the budget name and the offending size so reports can show how far
    the computation got.
    """

    def __init__(self, what: str, limit, reached=None):
        self.what = what
        self.limit = limit
        self.reached = reached
        detail = f"{what}: limit {limit}"
        if reached is not None:
            detail += f", reached {reached}"
        super().__init__(detail)


class TaskInvalidError(MalformedInputError):
    """A transitivity task failed validation (empty clopen set, witness not in
    its set, or finite-index witness)."""


class SearchFailure(ChabautyLabError):
    """A complete, budgeted search ended with every candidate refuted.

    This is a *verified* failure: `progress` records the budgets used and the
    deepest partial progress (how many checks the best candidate passed), so
    the outcome is reproducible evidence, not a timeout.
    """

    def __init__(self, message: str, progress: dict):
        self.progress = progress
        super().__init__(message)
