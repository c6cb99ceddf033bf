"""K-means prototype extraction + least-squares kernel classification."""

from ._core import (
    DegenerateInput,
    DimensionError,
    FormatError,
    IntegrityError,
    InvalidArgument,
    KernelModel,
    KmkcError,
    Model,
    SingularMatrix,
    TruncatedInput,
    Unclassifiable,
    dft_halfspectrum_sqrtmag,
    error_rate,
    extract_patches,
    fft_features,
    fit,
    gemm,
    kmeans_assign,
    kmeans_fit,
    load_idx_images,
    load_idx_labels,
    raw_features,
    save_idx_images,
    save_idx_labels,
    set_thread_count,
    solve_dense,
    thread_count,
    train_lssvm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
