"""Response-based knowledge distillation for image super-resolution.

The library trains compact SR networks under a frozen teacher, feeding the
teacher-only supervision with inputs upcycled from the training pairs
(zoom-in HR crops and zoom-out LR downsamples) and regularizing the student
with invertible-augmentation label consistency.
"""

from .augment import Augmentation, NON_IDENTITY, apply, invert, sample
from .data import DatasetManifest, ingest, load_all_pairs, make_synthetic_corpus
from .errors import (
    CheckpointError,
    ConfigError,
    DataError,
    DivisibilityError,
    GradientError,
    ShapeError,
    SizeError,
    SRDistillError,
)
from .imaging import (
    ResampleSpec,
    bicubic_down,
    bicubic_resize,
    bicubic_up,
    load_png,
    random_crop,
    save_png,
    shave_border,
    to_y_channel,
)
from .losses import LossReport, LossWeights, consistency_loss, dukd_loss, l1, total_loss, zoom_out_rec_loss
from .metrics import MetricRecord, MetricReport, SimilarityReport, psnr_y, similarity_report, ssim_y
from .model import (
    SRModel,
    SRModelConfig,
    build_model,
    load_adapted,
    load_checkpoint,
    parameter_count,
    preset_config,
    save_checkpoint,
)
from .optim import AdamState, OptimizerConfig, adam_step, lr_at
from .trainer import ExperimentConfig, TrainFlags, params_digest, run
from .upcycle import TrainingPair, UpcycledBatch, build_upcycled_batch, zoom_in, zoom_out

__version__ = "0.1.0"
