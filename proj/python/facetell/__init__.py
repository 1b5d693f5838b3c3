"""Facial-reflection side-channel simulator.

Thin wrapper over the compiled ``_facetell`` extension. Images are numpy
``uint8`` arrays of shape (height, width, 3); configurations are JSON
strings in the same format the command-line tool reads.
"""

from ._facetell import (
    UNKNOWN,
    ks_pvalue,
    ks_test,
    reflected_intensity,
    default_config,
    validate_config,
    render_face,
    simulate_weight_curves,
    mdc_search,
    app_palette,
    generate_dataset,
    extract_features,
    train_model,
    predict,
    attack,
    hlc_correct,
    hlc_sweep,
)

__all__ = [
    "UNKNOWN",
    "ks_pvalue",
    "ks_test",
    "reflected_intensity",
    "default_config",
    "validate_config",
    "render_face",
    "simulate_weight_curves",
    "mdc_search",
    "app_palette",
    "generate_dataset",
    "extract_features",
    "train_model",
    "predict",
    "attack",
    "hlc_correct",
    "hlc_sweep",
]
