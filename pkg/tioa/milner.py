"""
Token-ring scheduler generator.

Node ``i`` waits in ``Idle`` for ``start_i?``, works in ``Busy`` and must
forward the token with ``start_{i+1}!`` between ``low`` and ``high`` time
units after it was started. A single node is an open ring: it starts idle and
its output goes to the environment. With two or more nodes the ring is
closed and node 0 holds the token initially.
"""

import logging
from dataclasses import replace
from fractions import Fraction

from tioa.model import (
    REFERENCE,
    Action,
    Atom,
    Edge,
    Guard,
    Location,
    Polarity,
    Relation,
    Tioa,
    complete_inputs,
    compose_all,
)

log = logging.getLogger("rich")

DEFAULT_LOW = Fraction(5)
DEFAULT_HIGH = Fraction(20)


def start_action(index: int) -> str:
    return f"start{index}"


def milner_node(index: int, nodes: int, low: Fraction = DEFAULT_LOW, high: Fraction = DEFAULT_HIGH, holder: bool = False) -> Tioa:
    """
    One scheduler node.

    Args:
        index (int): Position of the node in the ring.
        nodes (int): Ring size; the node forwards to ``(index + 1) % nodes``, or to ``index + 1`` for a single node.
        holder (bool): Whether the node starts busy, holding the token.

    Returns:
        Tioa: The node, completed on inputs with self-loops.
    """
    x = 1
    received = start_action(index)
    forwarded = start_action(index + 1 if nodes == 1 else (index + 1) % nodes)
    busy = Guard((Atom(x, REFERENCE, Relation.LE, Fraction(high)),))
    window = Guard((Atom(x, REFERENCE, Relation.GE, Fraction(low)),) + busy.atoms)
    node = Tioa(
        f"Node{index}",
        (f"x{index}",),
        (Action(received, Polarity.INPUT), Action(forwarded, Polarity.OUTPUT)),
        (Location("Idle"), Location("Busy", busy)),
        "Busy" if holder else "Idle",
        (
            Edge("Idle", received, Guard(), frozenset({x}), "Busy"),
            Edge("Busy", forwarded, window, frozenset(), "Idle"),
        ),
    )
    return complete_inputs(node, "self")


def milner_ring(nodes: int, low: Fraction = DEFAULT_LOW, high: Fraction = DEFAULT_HIGH) -> Tioa:
    """Composition of ``nodes`` scheduler nodes; node 0 holds the token when the ring is closed."""
    if nodes < 1:
        raise ValueError("a ring needs at least one node")
    if not 0 <= low <= high:
        raise ValueError("the forwarding window must satisfy 0 <= low <= high")
    parts = [milner_node(i, nodes, low, high, holder=nodes > 1 and i == 0) for i in range(nodes)]
    ring = replace(compose_all(parts), name=f"Milner{nodes}")
    log.debug(f"[Milner{nodes}] {len(ring.locations)} locations, {len(ring.edges)} edges")
    return ring
