"""uqvol: uncertainty-aware neural representations of 3D scalar fields.

Train compact sinusoidal-MLP surrogates of dense volumes, estimate
epistemic uncertainty with Monte Carlo dropout or deep ensembles, and
render mean images with per-pixel uncertainty and error maps.
"""

from .checkpoint import load_params, save_params
from .network import (
    ActivationTape,
    DropoutState,
    FieldTopology,
    ParameterSet,
    backward,
    dropout_blocks_for_layout,
    forward,
    init_params,
)
from .render import (
    Camera,
    RGBImage,
    TransferFunction,
    active_backend,
    raycast,
    render_stack,
)
from .training import (
    EnsembleSpec,
    TrainConfig,
    TrainReport,
    lr_at_epoch,
    train_ensemble,
    train_single,
)
from .uncertainty import (
    FieldSummary,
    RealizationStack,
    psnr_rmse,
    reconstruct_deterministic,
    reconstruct_ensemble,
    reconstruct_mc,
    summarize,
)
from .volume import (
    GridSpec,
    Normalizer,
    Volume,
    generate_teardrop,
    lattice_coordinates,
    load_volume,
    make_normalizer,
    save_volume,
)

__version__ = "0.1.0"
