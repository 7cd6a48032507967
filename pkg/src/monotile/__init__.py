"""Monochromatic tilings of edge-coloured complete graphs.

Data model, embedding and greedy covering, weak regularity calculus,
density-increment absorption, exact small-case solvers, and an
experiment CLI.
"""

from .covers import (
    CoverVerdict,
    Piece,
    Tiling,
    TilingVerdict,
    canonical_cover_check,
    clique_degree,
    clique_density,
    verify_tiling,
)
from .errors import (
    BudgetExceeded,
    ExactModeError,
    InvalidInput,
    MissingFamilyMember,
    PreconditionError,
    SearchExhausted,
    StageFailure,
)
from .graphs import (
    ColouredCompleteGraph,
    FamilySpec,
    PatternGraph,
    complete_pattern,
    dump_colouring,
    family_by_name,
    family_member,
    load_colouring,
    read_colouring,
    write_colouring,
)
from .embed import (
    AllColouringsResult,
    GreedyResult,
    check_all_colourings,
    find_mono_copy,
    greedy_cover,
)
from .exact import (
    LehelReport,
    MinTilingResult,
    StarCoverResult,
    StarsBound,
    TilingNumberResult,
    colouring_from_index,
    lehel_exhaustive,
    min_star_cover,
    min_tiling,
    stars_bound_threshold,
    stars_union_bound,
    tiling_number,
)

__version__ = "0.1.0"
