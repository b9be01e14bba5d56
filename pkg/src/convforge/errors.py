"""Exception hierarchy shared across the package.

Every error that a CLI command can surface carries a distinct exit code so
shell pipelines can tell failure modes apart.
"""

from __future__ import annotations


class ConvforgeError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParseError(ConvforgeError):
    """A structured-text document could not be parsed."""

    exit_code = 3


class ValidationError(ConvforgeError):
    """A document parsed but violates its schema; message includes the path."""

    exit_code = 4

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class UnknownSlotError(ConvforgeError):
    """A constraint or lookup referenced a slot the schema does not declare."""

    exit_code = 5


class EmptySchemaError(ConvforgeError):
    """Schema has no constrainable slots to build goals from."""

    exit_code = 6


class EmptyDistributionError(ConvforgeError):
    """Profile mixture has no entries or zero total weight."""

    exit_code = 6


class ClosedDialogueError(ConvforgeError):
    """The user simulator was stepped after it already said good bye."""

    exit_code = 7


class MissingRuleError(ConvforgeError):
    """No grammar rule or override exists for a dialogue act."""

    exit_code = 8


class PlaceholderMismatchError(ConvforgeError):
    """A template override references a slot outside its key."""

    exit_code = 8


class WrongVoteCountError(ConvforgeError):
    """Meaning validation needs exactly two votes per utterance."""

    exit_code = 9


class DanglingReferenceError(ConvforgeError):
    """A rewrite, vote, or span fix points at an unknown task."""

    exit_code = 9


class EmptyMapError(ConvforgeError):
    """Expansion was asked to run against an empty paraphrase map."""

    exit_code = 10


class EmptyCorpusError(ConvforgeError):
    """Metrics were requested over a corpus with no dialogues."""

    exit_code = 11


class UnknownFormatError(ConvforgeError):
    """Corpus import was asked for a format it does not know."""

    exit_code = 11


class TooFewDialoguesError(ConvforgeError):
    """A requested split would leave one partition empty."""

    exit_code = 12


class UnresolvedReferenceError(ConvforgeError):
    """A cross-goal reference points at a goal that committed nothing."""

    exit_code = 7
