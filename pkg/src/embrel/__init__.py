"""Word-embedding evaluation and post relatedness detection.

Two experiments share this package: scoring embedding tables on gold
word-similarity pairs, and classifying (post, opening post) pairs as
related or not from mean-pooled embeddings with a cosine k-NN.
"""

from .classify import CosineKNNClassifier, CvResult, LearningCurve, cross_validate, knn_predict, learning_curve
from .compose import (
    MeanPoolingVectorizer,
    PairComposer,
    PcaModel,
    PostVector,
    PrincipalComponents,
    Strategy,
    compose_pair,
    embed_post,
    fit_pca,
)
from .dataset import AnnotationRecord, PostPairRecord, agreement_stats, load_pairs, majority_label
from .embeddings import EmbeddingTable, cosine_distance, cosine_similarity, load_embeddings, lookup
from .metrics import ConfusionCounts, average_precision, f1_score, spearman_rho
from .simeval import SimEvalReport, WordJudgmentSet, evaluate_similarity, load_judgments
from .textproc import TextPreprocessor, clean_text, lemmatize, tokenize

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord",
    "ConfusionCounts",
    "CosineKNNClassifier",
    "CvResult",
    "EmbeddingTable",
    "LearningCurve",
    "MeanPoolingVectorizer",
    "PairComposer",
    "PcaModel",
    "PostPairRecord",
    "PostVector",
    "PrincipalComponents",
    "SimEvalReport",
    "Strategy",
    "TextPreprocessor",
    "WordJudgmentSet",
    "agreement_stats",
    "average_precision",
    "clean_text",
    "compose_pair",
    "cosine_distance",
    "cosine_similarity",
    "cross_validate",
    "embed_post",
    "evaluate_similarity",
    "f1_score",
    "fit_pca",
    "knn_predict",
    "learning_curve",
    "lemmatize",
    "load_embeddings",
    "load_judgments",
    "load_pairs",
    "lookup",
    "majority_label",
    "spearman_rho",
    "tokenize",
]
