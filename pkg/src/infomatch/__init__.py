"""Match news articles to clinical guidelines by summarizing, embedding and
comparing them, with relevance cutoffs calibrated on labeled pairs."""

from .corpus import Document, LabeledPair, VoteRecord, aggregate_votes, fleiss_kappa, split_dataset
from .embed import WordVectorStore, load_vectors
from .errors import ConfigError, DataError, InfomatchError
from .evaluate import ModelConfig, PairScorer, run_grid
from .preprocess import PreprocessConfig, preprocess
from .similarity import ScoringOptions, score_pair
from .summarize import SummarizerConfig, summarize

__version__ = "0.1.0"
