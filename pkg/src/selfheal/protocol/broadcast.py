"""BROADCAST: a node gets its quorum to threshold-sign a message and hands it out."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

from ..crypto_sim import SignedMessage, ThresholdNotMet

if TYPE_CHECKING:
    from .core import Protocol


@dataclass(frozen=True)
class BroadcastResult:
    signed: SignedMessage | None
    messages: int
    delivered: int

    @property
    def ok(self) -> bool:
        return self.signed is not None


def broadcast(
    proto: "Protocol",
    x: int,
    payload: bytes,
    qi: int,
    audience: int,
    kind: str = "broadcast",
    per_member: Mapping[int, bytes] | None = None,
) -> BroadcastResult:
    """Run BROADCAST of ``payload`` by ``x`` through quorum index ``qi``.

    ``audience`` is |S|, the number of recipients of the signed result; the
    recipients themselves are implicit in the caller. ``x`` must belong to
    the quorum or be the SEND endpoint using it. A broadcaster that sends
    different payloads to different members passes ``per_member``; members
    sign whatever they got, so no payload reaches the threshold unless
    enough of them agree.

    Cost: |Q| requests + one share per signing member + |S| deliveries.
    """
    g = proto.graph
    members = g.members_index(qi)
    q = g.quorum_id(qi)
    signers = proto.signing_members(qi)
    messages = len(members) + len(signers)
    signed = None
    if per_member is None:
        shares = proto.scheme.sign_shares(q, payload, signers)
        try:
            signed = proto.scheme.combine_shares(q, payload, shares)
        except ThresholdNotMet:
            signed = None
    else:
        groups = Counter(per_member.get(y, payload) for y in signers)
        for candidate, _ in groups.most_common():
            got = [y for y in signers if per_member.get(y, payload) == candidate]
            shares = proto.scheme.sign_shares(q, candidate, got)
            try:
                signed = proto.scheme.combine_shares(q, candidate, shares)
                break
            except ThresholdNotMet:
                continue
    delivered = audience if signed is not None else 0
    messages += delivered
    proto.meter.add(kind, messages)
    return BroadcastResult(signed, messages, delivered)
