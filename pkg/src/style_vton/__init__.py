"""Three-stage virtual try-on with per-region style editing."""

from .core import (
    LABELS,
    AffineWarp,
    BinaryMask,
    DatasetPair,
    ImageTensor,
    PoseHeatmap,
    SegmentationMap,
    default_sigma,
    make_gaussian_heatmap,
    mask_iou,
)
from .config import (
    STAGE_GROUPS,
    STAGE_NAMES,
    RunConfig,
    StageConfig,
    config_from_json,
    config_from_overrides,
    config_hash,
    get_profile,
    resolve_data_dir,
    resolve_stages,
    toy_profile,
    paper_profile,
)
from .checkpoint import load_checkpoint, manifest_hash, save_checkpoint, write_manifest
from .evaluate import batch_infer, evaluate_checkpoints, evaluate_dirs
from .data_synth import TEXTURE_KINDS, generate_synthetic_dataset, generate_synthetic_pair
from ._version import __version__, version_string
from .inference import TryOnPipeline, TryonResult
from .losses import (
    adv_loss,
    correspondence_recon_loss,
    kl_loss,
    l1_texture_loss,
    parsing_pixel_loss,
    stage2_losses,
    texture_gan_loss,
)
from .metrics import ab_aggregate, format_ab_table, inception_score, load_votes_csv, ssim
from .person import PersonRepresentation, build_person_representation
from .style_edit import (
    ColorPreferenceClassifier,
    EditResult,
    FashionClassifier,
    StyleCode,
    StyleGenerators,
    encode_style,
    minimal_edit,
    render_style,
)
from .texture_map import (
    UVCorrespondence,
    identity_correspondence,
    predict_correspondence,
    sample_texture,
    synthesize_tryon,
    warp_contour,
)
from .training import MissingStageError, lr_at_epoch, read_loss_csv, train


__all__ = [
    "LABELS",
    "TEXTURE_KINDS",
    "AffineWarp",
    "BinaryMask",
    "ColorPreferenceClassifier",
    "DatasetPair",
    "EditResult",
    "FashionClassifier",
    "ImageTensor",
    "PersonRepresentation",
    "PoseHeatmap",
    "RunConfig",
    "SegmentationMap",
    "StageConfig",
    "StyleCode",
    "StyleGenerators",
    "TryOnPipeline",
    "TryonResult",
    "UVCorrespondence",
    "ab_aggregate",
    "batch_infer",
    "adv_loss",
    "config_from_json",
    "config_from_overrides",
    "config_hash",
    "evaluate_checkpoints",
    "evaluate_dirs",
    "format_ab_table",
    "build_person_representation",
    "correspondence_recon_loss",
    "default_sigma",
    "encode_style",
    "generate_synthetic_dataset",
    "generate_synthetic_pair",
    "get_profile",
    "identity_correspondence",
    "inception_score",
    "kl_loss",
    "l1_texture_loss",
    "load_checkpoint",
    "load_votes_csv",
    "lr_at_epoch",
    "manifest_hash",
    "MissingStageError",
    "make_gaussian_heatmap",
    "mask_iou",
    "minimal_edit",
    "parsing_pixel_loss",
    "predict_correspondence",
    "render_style",
    "read_loss_csv",
    "resolve_data_dir",
    "resolve_stages",
    "save_checkpoint",
    "sample_texture",
    "ssim",
    "stage2_losses",
    "synthesize_tryon",
    "texture_gan_loss",
    "STAGE_GROUPS",
    "STAGE_NAMES",
    "toy_profile",
    "paper_profile",
    "train",
    "version_string",
    "write_manifest",
    "warp_contour",
]
