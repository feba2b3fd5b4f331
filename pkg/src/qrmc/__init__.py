"""Robust quaternion matrix completion toolkit.

Recovers a low-rank quaternion matrix plus a sparse corruption term from
partial, noisy observations, with color image/video front ends and a
nonlocal-self-similarity patch pipeline for large data.
"""

from .qmat import (
    ComplexAdjoint,
    NumericalError,
    QMatrix,
    QsvdFactors,
    Quaternion,
    complex_adjoint,
    conj_transpose,
    elementwise_sign_abs,
    hamilton_product,
    inner_product,
    load_qmatrix,
    norm,
    numerical_rank,
    qsvd,
    random_qmatrix,
    save_qmatrix,
)
from .prox import (
    GstParams,
    McpParams,
    mcp_gradient,
    mcp_norm,
    mcp_phi,
    prox_mcp,
    qgst,
    qgst_moduli,
    qgst_threshold,
    svt_mcp,
)
from .solver import (
    KktResiduals,
    ObservationMask,
    RecoveryReport,
    SolverConfig,
    default_lambda,
    kkt_residuals,
    nrqmc_solve,
    residuals_to_csv,
)
from .nss import (
    ClusterModel,
    GroupProblem,
    PatchPlan,
    assignments_to_csv,
    build_group_problems,
    extract_patches,
    kmeanspp_cluster,
    nrqmc_nss,
    solve_and_aggregate,
)
from .imaging import (
    ColorImage,
    ColorVideo,
    CorruptionSpec,
    add_impulse_noise,
    corrupt,
    gen_mask,
    image_to_qmatrix,
    metrics,
    psnr,
    qmatrix_to_image,
    read_image,
    read_video,
    ssim,
    write_image,
    write_video,
)

__version__ = "0.1.0"
