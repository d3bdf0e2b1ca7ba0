"""Explainable color naming for person search.

Pipeline: survey data preparation -> decision-tree color classifier ->
image pre-processing -> per-part dominant color -> pooled per-identity
records -> conjunctive queries and region-precision evaluation.
"""

from .errors import (
    ColorSearchError, ConfigError, DataError, EmptyDatasetError,
    EmptyRegionError, QueryError, TreeFormatError,
)
from .survey import (
    BERLIN_KAY_LABELS, ColorNameDataset, ColorSample, DatasetFilterParams,
    Stage, filter_by_frequency, parse_survey, remove_outliers,
    resample_smote, restrict_labels,
)
from .tree import (
    ColorPrediction, DecisionTree, TreeTrainParams, classify,
    classify_batch, decision_path, export_dot, load_tree, save_tree,
    train_tree,
)
from .imgproc import (
    EnhancementGrid, EnhancementParams, RetinexParams, enhance,
    learn_enhancement, msrcp,
)
from .regions import (
    BACKGROUND, PartColor, QuantizationParams, SemanticMap,
    SmoothingParams, dominant_color, erode_mask, pool_parts,
    smooth_semantic_map,
)
# note: the search *function* stays in its submodule (colorsearch.search.search)
# so the module attribute is not shadowed
from .search import (
    EvaluationReport, PersonRecord, Query, build_record, evaluate, parse_query,
)

__version__ = "0.1.0"
