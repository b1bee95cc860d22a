"""Domain model for binary freshness of gossip networks.

A source refreshes its own information as a Poisson process of rate
``lambda_e``.  Receivers try to keep a copy of the current information,
obtaining it from the source (directly, or via clusterheads) and, in fully
connected topologies, from each other through gossip.  A node is *fresh*
while its copy matches the source's current version.

Every dissemination policy supported here reduces to one function: the
update intensity delivered to each stale node when exactly ``j`` nodes are
currently fresh.  That function, :func:`per_stale_rate`, is shared by the
exact calculations in :mod:`gossipfresh.analytic` and the event-driven
engines in :mod:`gossipfresh.simulator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import Callable, Union


class GossipPolicy(Enum):
    """Dissemination policy for one tier of receivers.

    ``DC_*`` tiers are disconnected: nodes receive only from their sender
    (source or clusterhead).  ``FC_*`` tiers are fully connected: fresh
    nodes also gossip to the others with total rate ``lambda_g`` each.
    ``RC`` variants concentrate the sender's total budget on currently
    stale targets, so the per-target rate grows as fewer targets remain;
    the ``noRC`` variants split the budget evenly regardless of state.
    ``FC_sRC`` applies the stale-targeting rule at the source only,
    ``FC_allRC`` at the source and at every gossiping node.
    """

    DC_noRC = "DC_noRC"
    DC_RC = "DC_RC"
    FC_noRC = "FC_noRC"
    FC_sRC = "FC_sRC"
    FC_allRC = "FC_allRC"

    @property
    def gossips(self) -> bool:
        return self.value.startswith("FC")

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


#: Policies allowed on the source-to-clusterhead tier (clusterheads never
#: gossip among themselves).
DC_POLICIES = (GossipPolicy.DC_noRC, GossipPolicy.DC_RC)

#: Long-term average binary freshness of a node, a probability in [0, 1].
FreshnessValue = float


@dataclass(frozen=True)
class Rates:
    """The four Poisson intensities driving a network, in arbitrary units.

    All freshness values are invariant under a common rescaling of the
    four rates (only ratios matter).

    Attributes:
        lambda_e: source self-refresh rate.  Must be positive for any
            freshness computation; zero is representable but rejected by
            :func:`validate`.
        lambda_s: total source-to-receiver delivery rate.
        lambda_c: total clusterhead-to-node delivery rate (clustered mode).
        lambda_g: total gossip rate of each fresh node (FC policies).
    """

    lambda_e: float
    lambda_s: float
    lambda_c: float = 0.0
    lambda_g: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ValueError(f"{f.name} must be a real number, got {v!r}")
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{f.name} must be finite and >= 0, got {v!r}")

    def scaled(self, factor: float) -> "Rates":
        """All four intensities multiplied by ``factor`` (time rescaling)."""
        return Rates(
            lambda_e=self.lambda_e * factor,
            lambda_s=self.lambda_s * factor,
            lambda_c=self.lambda_c * factor,
            lambda_g=self.lambda_g * factor,
        )


RATE_FIELDS = tuple(f.name for f in fields(Rates))


@dataclass(frozen=True)
class Flat:
    """A single tier of ``n`` symmetric nodes fed by one sender.

    ``source_rate`` and ``gossip_rate`` name which :class:`Rates` field
    plays each role, so the same shape describes a source-fed network
    (the default) or the inside of one cluster (``source_rate="lambda_c"``).
    """

    n: int
    policy: GossipPolicy
    source_rate: str = "lambda_s"
    gossip_rate: str = "lambda_g"


@dataclass(frozen=True)
class Clustered:
    """``m`` clusters of ``k`` nodes each, fed through clusterheads.

    The source updates the m clusterheads (total rate ``lambda_s``,
    ``source_policy``); each clusterhead relays to its k nodes (total rate
    ``lambda_c``, ``cluster_policy``, gossip rate ``lambda_g`` for FC
    cluster policies).  Requires ``m * k == n``.
    """

    n: int
    k: int
    m: int
    source_policy: GossipPolicy
    cluster_policy: GossipPolicy


Shape = Union[Flat, Clustered]


@dataclass(frozen=True)
class NetworkSpec:
    """A network shape plus the rates that drive it."""

    shape: Shape
    rates: Rates

    @staticmethod
    def flat(
        n: int,
        policy: GossipPolicy,
        rates: Rates,
        source_rate: str = "lambda_s",
        gossip_rate: str = "lambda_g",
    ) -> "NetworkSpec":
        return NetworkSpec(Flat(n, policy, source_rate, gossip_rate), rates)

    @staticmethod
    def clustered(
        n: int,
        k: int,
        source_policy: GossipPolicy,
        cluster_policy: GossipPolicy,
        rates: Rates,
        m: int | None = None,
    ) -> "NetworkSpec":
        if m is None:
            m = n // k if k >= 1 else 0
        return NetworkSpec(Clustered(n, k, m, source_policy, cluster_policy), rates)


def per_stale_rate(
    policy: GossipPolicy,
    total_source: float,
    total_gossip: float,
    n: int,
    j: int,
) -> float:
    """Update intensity seen by each stale node when ``j`` nodes are fresh.

    ``total_source`` is the sender's total delivery budget and
    ``total_gossip`` the total gossip budget of each fresh node.  With
    ``j`` fresh nodes out of ``n``:

    * ``DC_noRC``:  ``total_source / n``
    * ``DC_RC``:    ``total_source / (n - j)``
    * ``FC_noRC``:  ``total_source / n + j * total_gossip / (n - 1)``
    * ``FC_sRC``:   ``total_source / (n - j) + j * total_gossip / (n - 1)``
    * ``FC_allRC``: ``(total_source + j * total_gossip) / (n - j)``

    For ``n == 1`` there are no gossip neighbours and the gossip term is
    zero (``j`` can only be 0, so every policy returns ``total_source``).

    Raises:
        ValueError: if ``n < 1``, ``j`` is outside ``[0, n - 1]``, or a
            rate is negative or not finite.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= j <= n - 1:
        raise ValueError(f"j must be in [0, {n - 1}] (at least one stale node), got {j}")
    for name, v in (("total_source", total_source), ("total_gossip", total_gossip)):
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    gossip_split = total_gossip / (n - 1) if n > 1 else 0.0
    if policy is GossipPolicy.DC_noRC:
        return total_source / n
    if policy is GossipPolicy.DC_RC:
        return total_source / (n - j)
    if policy is GossipPolicy.FC_noRC:
        return total_source / n + j * gossip_split
    if policy is GossipPolicy.FC_sRC:
        return total_source / (n - j) + j * gossip_split
    if policy is GossipPolicy.FC_allRC:
        return (total_source + j * total_gossip) / (n - j)
    raise ValueError(f"unknown policy {policy!r}")


def stale_rate_fn(
    policy: GossipPolicy,
    total_source: float,
    total_gossip: float,
    n: int,
) -> Callable[[int], float]:
    """Bind :func:`per_stale_rate` to a policy and rates, leaving ``u(j)``."""

    def u(j: int) -> float:
        return per_stale_rate(policy, total_source, total_gossip, n, j)

    return u


def flat_rate_values(shape: Flat, rates: Rates) -> tuple[float, float]:
    """Resolve a flat shape's (total_source, total_gossip) from ``rates``."""
    return getattr(rates, shape.source_rate), getattr(rates, shape.gossip_rate)


def validate(spec: NetworkSpec) -> list[str]:
    """Check every structural invariant of ``spec``.

    Returns a list of human-readable violation messages; the spec is
    usable iff the list is empty.  Nothing is raised: callers that need
    hard failure join the messages into an exception themselves.
    """
    problems: list[str] = []
    r = spec.rates
    for name in RATE_FIELDS:
        v = getattr(r, name)
        if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            problems.append(f"{name} must be finite and >= 0, got {v!r}")
    if r.lambda_e <= 0:
        problems.append(
            f"lambda_e must be > 0 so refresh cycles terminate, got {r.lambda_e!r}"
        )

    shape = spec.shape
    if isinstance(shape, Flat):
        if shape.n < 1:
            problems.append(f"flat network needs n >= 1, got n={shape.n}")
        if shape.source_rate not in RATE_FIELDS:
            problems.append(f"source_rate must name a rate field, got {shape.source_rate!r}")
        if shape.gossip_rate not in RATE_FIELDS:
            problems.append(f"gossip_rate must name a rate field, got {shape.gossip_rate!r}")
    elif isinstance(shape, Clustered):
        if shape.n < 1:
            problems.append(f"clustered network needs n >= 1, got n={shape.n}")
        if shape.k < 1:
            problems.append(f"cluster size k must be >= 1, got k={shape.k}")
        if shape.m < 1:
            problems.append(f"cluster count m must be >= 1, got m={shape.m}")
        if shape.m >= 1 and shape.k >= 1 and shape.m * shape.k != shape.n:
            problems.append(
                f"m*k != n: {shape.m}*{shape.k} = {shape.m * shape.k} != {shape.n}"
            )
        if shape.source_policy not in DC_POLICIES:
            problems.append(
                "clusterheads form a disconnected tier: source_policy must be "
                f"DC_noRC or DC_RC, got {shape.source_policy.value}"
            )
    else:  # pragma: no cover - defensive
        problems.append(f"unknown shape {type(shape).__name__}")
    return problems


def require_valid(spec: NetworkSpec) -> None:
    """Raise ``ValueError`` listing all violations if ``spec`` is invalid."""
    problems = validate(spec)
    if problems:
        raise ValueError("invalid network spec: " + "; ".join(problems))
