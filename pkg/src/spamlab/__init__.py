"""Trainable naive Bayes spam filter with cost-sensitive evaluation.

The package covers the whole experimental pipeline: corpus ingestion and
token-code anonymization, mutual-information attribute selection, a
cost-ratio-parameterized naive Bayes classifier, a keyword-rule baseline,
and a seeded cross-validation harness with weighted-error metrics, sweeps,
and paired significance tests.
"""

__version__ = "0.1.0"

from .classifier import (BinaryNaiveBayes, Decision, FilterModel, decide,
                         decision_threshold, load_model, save_model, train)
from .corpus import (Corpus, LEGIT, Message, PreprocessConfig, RawMessage,
                     SPAM, TokenMap, dedup_spam, emulate_address_book,
                     encrypt_corpus, load_corpus, load_message_file,
                     load_raw_dir, load_token_map, parse_raw_message,
                     preprocess, preprocess_corpus, raw_to_message,
                     save_corpus, save_token_map, tokenize)
from .errors import DataError
from .evaluation import (ConfusionCounts, CvResult, FoldPlan, FoldResult,
                         MetricsReport, SweepRow, TTestResult, TrainingSizeRow,
                         attribute_sweep, confusion_from_decisions,
                         cross_validate, cross_validate_keyword,
                         fold_results_to_csv, make_folds, metrics,
                         paired_t_test, student_t_sf, summarize_folds,
                         sweep_rows_to_csv, training_rows_to_csv,
                         training_size_sweep)
from .features import (Attribute, AttributeSet, AttributeStats,
                       MutualInfoSelector, collect_stats, load_attribute_set,
                       mutual_information, presence_matrix, save_attribute_set,
                       select_attributes, vectorize, vectorize_docs)
from .keyword_filter import (KeywordClause, KeywordRule, RuleSet,
                             classify_keyword, load_rules, match, parse_rules)
from .lemmatizer import default_lemmatizer, load_stoplist

__all__ = [name for name in dir() if not name.startswith("_")]
