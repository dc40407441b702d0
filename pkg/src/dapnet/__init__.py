"""RGBT tracking with dense two-modality feature aggregation and pruning."""

from .core import Box, TargetState, box_to_state, center_distance, iou, state_to_box
from .backbone import Backbone, BackboneConfig, LRNParams
from .aggregation import AggBlock, DenseAggregation, align_scale, pool_geometry
from .head import Head, classification_loss, classify
from .model import DAPNet, NetConfig, VARIANTS, toy_net_config
from .pruning import (ChannelSelection, DegenerateScoresError, PruningConfig,
                      channel_scores, prune, wrs_select)
from .sampling import (CandidateSet, SampleSpec, SamplingExhaustedError,
                       draw_training_samples, extract_patch, gaussian_candidates)
from .data import DataError, RGBTSequence, load_results, load_sequence, save_results
from .synth import SynthConfig, synth_sequence
from .training import NumericError, TrainConfig, train_offline
from .tracking import BBoxRegressor, TrackConfig, Tracker, track_sequence
from .evaluation import (ATTRIBUTES, EvalConfig, SequenceResult,
                         attribute_breakdown, precision_curve, success_curve)
from .config import ConfigError, ExperimentConfig, load_config

__version__ = "0.1.0"
