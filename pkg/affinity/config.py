from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Limits:
    """Tunables shared by the numerical modules.

    Attributes
    ----------
    leaf_cap : int
        Largest number of words one traversal may visit.
    prefix_depth : int
        Depth at which the word tree is split into independent tasks.
    batch_leaves : int
        Largest subtree expanded in one vectorised block.
    min_gap : float
        Smallest angular gap (radians) accepted for a cone pair.
    burn_in : int
        Chaos-game iterates discarded per chain.
    chains : int
        Independent chaos-game chains advanced in lockstep.
    max_sweeps : int
        Sweep limit for the Jacobi singular value iteration.
    """

    leaf_cap: int = 2 ** 24
    prefix_depth: int = 4
    batch_leaves: int = 2 ** 15
    min_gap: float = 1e-3
    burn_in: int = 64
    chains: int = 1024
    max_sweeps: int = 40

    def with_overrides(self, **changes) -> "Limits":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


DEFAULT_LIMITS = Limits()
