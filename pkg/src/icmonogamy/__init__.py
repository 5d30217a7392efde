"""Information-causality monogamy of CHSH correlations on tripartite no-signaling boxes."""

__version__ = "0.1.0"

from .entropy import (  # noqa: E402
    ChannelSpec,
    JointTable,
    apply_bsc,
    binary_entropy,
    conditional_mutual_information,
    entropy,
    mutual_information,
)
from .boxes import (  # noqa: E402
    BipartiteBox,
    SlicePoint,
    TripartiteBox,
    chsh,
    chsh_ab,
    chsh_be,
    depolarize,
    isotropic_box,
    pr_box,
    slice_box,
    xor_game_box,
)
from .criteria import (  # noqa: E402
    ICReport,
    bipartite_rac_joint,
    eval_ic_bipartite_limit,
    eval_ic_generalized,
    eval_ic_original,
    eval_ic_tripartite,
    tripartite_rac_joint,
)
from .wiring import Wiring, apply_wiring, best_wired_violation, enumerate_wirings  # noqa: E402
from .curves import (  # noqa: E402
    CurvePoint,
    SweepConfig,
    gamma_max,
    max_violation_over_eps,
    ns_bound,
    quantum_bound,
    security_bound,
    security_threshold,
)
