"""Explicit Transformer weights approximating column-symmetric polynomials."""
from .combinatorics import (
    count_compositions,
    enumerate_multi_indices,
    enumerate_rank_tuples,
    falling_factorial,
    symmetry_coefficient,
)
from .constructor import (
    BuildBudget,
    ReadOut,
    RowMap,
    assemble_theorem1,
    build_monomial_bank,
    build_rank1_network,
    build_rank_recursion,
    build_summation_attention,
    build_theorem1,
    embed_ffn_in_transformer,
)
from .networks import (
    FfnLayer,
    FfnNetwork,
    TransformerNetwork,
    eval_ffn,
    eval_transformer,
    size_report,
)
from .polyoracle import (
    Polynomial,
    decompose,
    eval_monomial_sym,
    eval_polynomial,
    parse_polynomial,
)
from .sawtooth import (
    GadgetParams,
    build_clamped_product_ffn,
    build_product_ffn,
    build_square_ffn,
)

__version__ = "0.1.0"
