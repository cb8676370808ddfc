"""pixelrank: exact low-rank certificates and tensor-network builders for
structured binary-image families."""

__version__ = "0.1.0"

from .images import (
    BinaryImage,
    FamilyFormatError,
    FamilyMeta,
    ImageFamily,
    Region,
    gen_random_family,
    gen_rectangle_outlines,
    gen_stacked_outlines,
    gen_vertical_bars,
    load_family,
    make_family,
    pad_family,
    pad_image,
    save_family,
)
from .rankcore import (
    Bipartition,
    FixedRowConstraint,
    RankFactorization,
    Unfolding,
    dense_unfolding_oracle,
    exact_rank,
    factorize,
    fixed_row_unfolding,
    pixel_prefix_unfolding,
    region_unfolding,
    row_prefix_unfolding,
    unfold,
)
from .certify import (
    StructureReport,
    ScalingReport,
    row_config_counts,
    fixed_row_rank_table,
    structure_report,
    feature_decomposition,
    fit_loglog,
    random_baseline_profile,
    region_rank_profile,
    scaling_experiment,
    verify_row_cut_subadditivity,
)
from .tt import (
    TensorTrain,
    block_partition_bound,
    elementary_train,
    load_tt,
    save_tt,
    tt_eval,
    tt_eval_batch,
    tt_from_dense,
    tt_from_family,
    tt_round,
    tt_sum,
    tt_sum_of_members,
    bond_scaling_report,
)
from .ht import (
    HTNetwork,
    Tree,
    TreeIndex,
    diagonalize,
    ht_eval,
    ht_eval_batch,
    ht_from_family,
    layer_rank_table,
    load_ht,
    save_ht,
    tree_structure,
    tt_ht_cross_check,
    verify_support_properties,
    channel_scaling_report,
)
