"""Identity-specific face cloaking.

Thin wrapper over the C++ core: embedding backends, deterministic variant
generation, the attention-weighted projected sign-gradient cloak optimizer,
cloak application and SSIM/PSNR metrics. Images are numpy float64 arrays of
shape (H, W, 3) with values in [0, 1].
"""

from ._facecloak import (
    BackendDescriptor,
    CloakMask,
    ToyBackend,
    apply_cloak,
    generate_variants,
    high_pass,
    load_cloak,
    load_image,
    optimize_cloak,
    psnr,
    save_cloak,
    save_png,
    ssim,
    train_toy_backend,
)

__all__ = [
    "BackendDescriptor",
    "CloakMask",
    "ToyBackend",
    "apply_cloak",
    "generate_variants",
    "high_pass",
    "load_cloak",
    "load_image",
    "optimize_cloak",
    "psnr",
    "save_cloak",
    "save_png",
    "ssim",
    "train_toy_backend",
]
