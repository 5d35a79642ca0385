"""Embedding-space topic extraction and evaluation."""

import importlib
import os
import sys

_ext_dir = os.environ.get("CBTM_EXTENSION_DIR")
if _ext_dir:
    # in-tree build: the extension sits next to the CMake targets
    sys.path.insert(0, _ext_dir)
    _core = importlib.import_module("_core")
    sys.path.remove(_ext_dir)
else:
    from . import _core

CbtmError = _core.CbtmError
EmbeddingSet = _core.EmbeddingSet
ReductionModel = _core.ReductionModel
CandidateVocabulary = _core.CandidateVocabulary
Topic = _core.Topic
TopicSet = _core.TopicSet

read_embedding_set = _core.read_embedding_set
write_embedding_set = _core.write_embedding_set
write_embedding_set_json = _core.write_embedding_set_json
cosine_similarity = _core.cosine_similarity
centroid = _core.centroid
weighted_centroid = _core.weighted_centroid
fit_reduction = _core.fit_reduction
fit_gmm = _core.fit_gmm
select_k = _core.select_k
original_space_centroids = _core.original_space_centroids
build_candidates = _core.build_candidates
extract_topics = _core.extract_topics
clean_topics = _core.clean_topics
evaluate = _core.evaluate
intruder_accuracy = _core.intruder_accuracy
intruder_similarity = _core.intruder_similarity
score_words = _core.score_words
pearson = _core.pearson
validate = _core.validate

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
