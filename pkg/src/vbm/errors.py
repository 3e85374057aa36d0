class ContractViolation(ValueError):
    """A caller broke an operation's precondition (bad source, occupied pivot, ...)."""
