"""Health-index estimation for asset classes from multi-year inspection
histories: feature engineering, an LSTM sequence classifier, a
last-inspection baseline and macro precision/recall evaluation."""

__version__ = "0.1.0"

from .dataset import (
    AssetHistory,
    ConditionSchema,
    HealthIndex,
    InspectionRecord,
    LabeledDataset,
    SynthConfig,
    cable_like,
    parse_csv,
    pole_like,
    split_train_test,
    synthesize,
    validate,
)
from .errors import DataError, NumericalError
from .features import FeaturePipeline, fit_pipeline
from .metrics import EvaluationReport, confusion, macro, precision_recall, report
from .network import ClassifierConfig, FnnBaseline, FnnConfig, SequenceClassifier
from .training import GridSpec, TrainConfig, TrainedModel, grid_search, train, train_baseline
