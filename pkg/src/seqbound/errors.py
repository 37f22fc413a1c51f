"""Exception hierarchy shared across the package.

Every error raised by this package derives from SeqboundError so callers
can catch domain failures without masking programming errors.
"""


class SeqboundError(Exception):
    """Base class for all seqbound domain errors."""


class ShapeMismatch(SeqboundError):
    """An array does not have the shape required by the alphabet."""


class NegativeEntry(SeqboundError):
    """A probability table contains a negative entry."""


class ZeroColumn(SeqboundError):
    """A conditional table has an all-zero column."""


class NotNormalized(SeqboundError):
    """A probability table is too far from normalized to accept."""


class EnumerationCapExceeded(SeqboundError):
    """A dense enumeration would exceed the configured cell cap."""


class IndexOutOfRange(SeqboundError):
    """A position, label, or observation index is out of range."""


class LengthMismatch(SeqboundError):
    """Two sequences that must share a length do not."""


class AlphabetMismatch(SeqboundError):
    """Two objects built over different alphabets were combined."""


class RankDeficientInput(SeqboundError):
    """An operation requiring a full-column-rank matrix got a deficient one."""


class FilterStarvation(SeqboundError):
    """The simulation's rejection filters accept too rarely to proceed."""


class NotFound(SeqboundError):
    """A counterexample search exhausted its tries without a witness."""


class DivergenceDetected(SeqboundError):
    """The training loss became non-finite."""


class EmptyCorpus(SeqboundError):
    """A corpus file yielded no usable sequences."""


class VocabTooLarge(SeqboundError):
    """A corpus vocabulary exceeds the configured cap."""
