"""Manifests, image decoding and preprocessing, batching, and the CTEN tensor format."""

from .batching import batch_iter, epoch_order, load_batch, load_image
from .cten import decode_cten, encode_cten, read_cten, write_cten
from .manifest import (
    DatasetManifest,
    class_index,
    class_weights,
    class_weights_from_counts,
    load_manifest,
    parse_manifest,
    stratified_split,
    write_manifest,
)
from .ppm import ImageBuffer, decode_ppm, encode_ppm
from .preprocess import hflip, normalize, resize_bilinear
from .synthetic import render_shape, write_shapes_dataset

__all__ = [
    "DatasetManifest", "ImageBuffer", "batch_iter", "class_index", "class_weights",
    "class_weights_from_counts", "decode_cten", "decode_ppm", "encode_cten", "encode_ppm",
    "epoch_order", "hflip", "load_batch", "load_image", "load_manifest", "normalize",
    "parse_manifest", "read_cten", "render_shape", "resize_bilinear", "stratified_split",
    "write_cten", "write_manifest", "write_shapes_dataset",
]
