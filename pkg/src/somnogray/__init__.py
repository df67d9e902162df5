"""Gray-area analysis for probabilistic sleep staging.

The package turns per-epoch stage probabilities (hypnodensities) into
actionable uncertainty: it quantifies how ambiguous each 30-second epoch
is, selects "gray areas" worth a human look, validates those selections
against scorer panels, and drives a review workflow over HTTP.

Typical flow: parse an EDF recording, preprocess and stage it into a
hypnodensity, compute an uncertainty series, select gray epochs, then
either evaluate against references or open a review session.
"""

from . import errors
from .consensus import exclusion_mask, known_uncertainty_split, majority_score
from .core import (
    EPOCH_SECONDS,
    EpochGrid,
    Hypnodensity,
    Hypnogram,
    N_STAGES,
    ScorerPanel,
    Stage,
    argmax_hypnogram,
    ensemble_average,
    panel_to_hypnodensity,
    vote_counts,
)
from .edf import ChannelSignal, EdfHeader, SignalHeader, make_header, parse_edf, write_edf
from .evalx import (
    AgreementReport,
    ConfusionMatrix,
    ExclusionCurve,
    GrayAgreementReport,
    agreement,
    capture_curve,
    confusion,
    exclusion_curve,
    gray_agreement,
)
from .preproc import (
    EpochedChannel,
    PreprocConfig,
    bandpass,
    epochize,
    iqr_normalize,
    preprocess_channel,
    resample,
)
from .stager import (
    SoftmaxModel,
    TrainConfig,
    apply,
    extract_features,
    load_model,
    save_model,
    stage_recording,
    train,
)
from .synthgen import SynthConfig, SynthRecording, generate, generate_signals
from .uncertainty import (
    GraySelection,
    UncertaintyMetric,
    UncertaintySeries,
    compute_uncertainty,
    select_gray_rank,
    select_gray_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "errors",
    "Stage",
    "N_STAGES",
    "EPOCH_SECONDS",
    "EpochGrid",
    "Hypnodensity",
    "Hypnogram",
    "ScorerPanel",
    "argmax_hypnogram",
    "vote_counts",
    "panel_to_hypnodensity",
    "ensemble_average",
    "UncertaintyMetric",
    "UncertaintySeries",
    "GraySelection",
    "compute_uncertainty",
    "select_gray_rank",
    "select_gray_threshold",
    "majority_score",
    "known_uncertainty_split",
    "exclusion_mask",
    "ConfusionMatrix",
    "AgreementReport",
    "ExclusionCurve",
    "GrayAgreementReport",
    "confusion",
    "agreement",
    "exclusion_curve",
    "capture_curve",
    "gray_agreement",
    "SignalHeader",
    "EdfHeader",
    "ChannelSignal",
    "parse_edf",
    "write_edf",
    "make_header",
    "PreprocConfig",
    "EpochedChannel",
    "bandpass",
    "resample",
    "iqr_normalize",
    "epochize",
    "preprocess_channel",
    "TrainConfig",
    "SoftmaxModel",
    "extract_features",
    "train",
    "apply",
    "stage_recording",
    "save_model",
    "load_model",
    "SynthConfig",
    "SynthRecording",
    "generate",
    "generate_signals",
]
