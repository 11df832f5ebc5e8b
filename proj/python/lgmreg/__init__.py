"""Rigid point cloud registration through latent Gaussian mixtures."""

from ._core import (
    DegenerateConfiguration,
    DegenerateMixture,
    Error,
    InvalidArgument,
    IoError,
    Model,
    __version__,
    apply_transform,
    em_fit,
    evaluate,
    generate_dataset,
    icp,
    invariant_features,
    m_theta,
    make_pair,
    posterior_gamma,
    random_rotation,
    recall,
    rmse,
    sample_shape,
    shape_families,
    train,
    untrained_model,
    weighted_umeyama,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
