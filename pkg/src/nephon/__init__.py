"""Correction of enharmonic named entities in ASR output.

The toolkit parses NE-aware token streams, matches extracted phoneme
sequences against a user-editable dictionary with Gestalt pattern
matching, rewrites entity spellings when the similarity clears a
threshold, and scores the result with CER-all / CER-NE.
"""

__version__ = "0.1.0"

from .corrector import Action, CorrectionOutcome, SpanDecision, as_threshold, correct
from .lexicon import DictEntry, Lexicon, load_lexicon
from .nea import FormatConfig, NeSpan, NeaHypothesis, Reference
from .similarity import SimilarityScore, gestalt_similarity, oracle_similarity

__all__ = [
    "Action",
    "CorrectionOutcome",
    "DictEntry",
    "FormatConfig",
    "Lexicon",
    "NeSpan",
    "NeaHypothesis",
    "Reference",
    "SimilarityScore",
    "SpanDecision",
    "as_threshold",
    "correct",
    "gestalt_similarity",
    "load_lexicon",
    "oracle_similarity",
    "__version__",
]
