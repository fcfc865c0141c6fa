"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed user input: bad state file, bad split spec, bad parameters.

    The command line maps this to exit code 2.
    """


class InvariantBreach(RuntimeError):
    """An internal soundness invariant failed (e.g. a lower bound exceeded
    an upper bound by more than numerical slack).

    The command line maps this to exit code 3.  If you ever see one, it is
    a bug worth reporting, not a property of the state you analysed.
    """
