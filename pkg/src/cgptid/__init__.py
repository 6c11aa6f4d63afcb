"""Target identification from multistatic conductivity data.

Pipeline: simulate the multistatic response of a 2-D inclusion, reconstruct
its contracted polarization tensors by least squares, and identify the shape
against a dictionary either by similarity-transform estimation or by
transform-invariant descriptors.
"""

__version__ = "0.1.0"

from .cgpt import (
    CgptPair,
    HarmonicCoeffs,
    RealCgptBlocks,
    assemble_cgpt_from_gpts,
    compute_cgpt,
    compute_gpt,
    from_real_blocks,
    harmonic_coeffs,
    to_real_blocks,
    transform_cgpt,
    transform_jacobian,
    translation_matrix,
)
from .geometry import (
    Boundary,
    SimilarityTransform,
    apply_transform,
    boundary_from_nodes,
    characteristic_size,
    make_damaged_flower,
    make_ellipse,
    make_flower,
    make_letter,
    parse_shape_spec,
    perturb_letter,
)
from .matching import (
    DescriptorPair,
    Dictionary,
    DictionaryEntry,
    MatchReport,
    algorithm1_match,
    algorithm2_match,
    anti_diagonal_means,
    debias,
    estimate_rotation_symmetric,
    estimate_scale,
    estimate_transform,
    estimate_transform_nonsymmetric,
    estimate_translation_symmetric,
    petal_count,
    shape_descriptors,
)
from .msr import (
    ArrayConfig,
    CoefficientMatrices,
    MsrMatrix,
    add_noise,
    coefficient_matrices,
    max_truncation_order,
    reconstruct_cgpt,
    resolving_order,
    simulate_msr,
    truncation_residual,
)
from .potential import (
    Density,
    NpSystem,
    contrast_from_conductivity,
    grad_fundamental,
    np_operator_matrix,
    single_layer_eval,
    solve_density,
)
