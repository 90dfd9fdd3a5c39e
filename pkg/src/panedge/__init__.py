"""Panoptic edge toolkit: label encoding, GT generation, fusion, losses and edge PQ."""
from ._accel import USE_NUMBA
from .edgegen import (
    InstanceCenter,
    default_sigma,
    instance_centers,
    make_center_heatmap,
    make_offset_field,
    make_targets,
    panoptic_to_edges,
)
from .fusion import FusionParams, assign_instances, extract_centers, fuse_panoptic
from .labels import (
    CategoryTaxonomy,
    canonicalize_instance_ids,
    decode_label,
    encode_label,
    semantic_of,
    validate_map,
)
from .metrics import edge_iou, edge_pq, match_segments, segments_of
from .numerics import (
    AttentionWeights,
    LossWeights,
    ada_softmax,
    center_loss,
    criss_cross_attention,
    finite_diff_gradient,
    offset_loss,
    semantic_edge_loss,
    total_loss,
)
from .synth import PerturbParams, SynthParams, generate_scene, perturb_prediction
from .tensor_io import read_tensor, write_tensor

__version__ = "0.1.0"
