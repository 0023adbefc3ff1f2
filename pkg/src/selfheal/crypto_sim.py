"""Simulated (|Q|, 7|Q|/8 - 1) threshold signatures and ephemeral key pairs.

Nothing here is real public-key cryptography. Every token is a keyed hash
under a secret that only the scheme object holds, so a caller without the
scheme cannot produce a token that verifies. That is the only property the
protocol relies on.
"""

from __future__ import annotations

import hashlib
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from typing import NamedTuple

from .quorum_graph import QuorumGraph, QuorumId

SHARE_BYTES = 16


class CryptoError(Exception):
    pass


class MembershipError(CryptoError):
    """A node tried to sign for a quorum it does not belong to."""


class ThresholdNotMet(CryptoError):
    def __init__(self, valid: int, threshold: int):
        super().__init__(f"{valid} valid shares, {threshold} required")
        self.valid = valid
        self.threshold = threshold


class VerificationUnavailable(CryptoError):
    """The verifying node does not know the quorum's public key."""


def threshold_for(quorum_size: int) -> int:
    """ceil(7|Q|/8) in integer arithmetic."""
    return (7 * quorum_size + 7) // 8


def digest(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=32).digest()


def _qbytes(q: QuorumId) -> bytes:
    return q[0].to_bytes(2, "little") + q[1].to_bytes(4, "little")


class SignatureShare(NamedTuple):
    signer: int
    quorum: QuorumId
    message_digest: bytes
    share_token: bytes


@dataclass(frozen=True)
class SignedMessage:
    payload: bytes
    quorum: QuorumId
    quorum_signature: bytes


@dataclass(frozen=True)
class QuorumKeyPair:
    quorum: QuorumId
    public_key: bytes
    private_shares: Mapping[int, bytes]


class _ShareMap(Mapping):
    """Per-member share tokens of one quorum, derived on access."""

    def __init__(self, scheme: "ThresholdScheme", q: QuorumId, members: tuple[int, ...]):
        self._scheme = scheme
        self._q = q
        self._members = members

    def __getitem__(self, node: int) -> bytes:
        if node not in self._members:
            raise KeyError(node)
        return self._scheme._member_secret(self._q, node)

    def __iter__(self) -> Iterator[int]:
        return iter(self._members)

    def __len__(self) -> int:
        return len(self._members)


class ThresholdScheme(Mapping):
    """Keys for every quorum of a graph; maps QuorumId to QuorumKeyPair."""

    def __init__(self, graph: QuorumGraph, secret: bytes):
        self.graph = graph
        self._secret = secret
        self._slots: dict[QuorumId, dict[int, int]] = {}

    # Mapping interface over quorums
    def __getitem__(self, q: QuorumId) -> QuorumKeyPair:
        members = self.graph.members(q)
        return QuorumKeyPair(q, self.public_key_for(q), _ShareMap(self, q, members))

    def __iter__(self) -> Iterator[QuorumId]:
        return (self.graph.quorum_id(i) for i in range(self.graph.num_quorums))

    def __len__(self) -> int:
        return self.graph.num_quorums

    def _mac(self, tag: bytes, *parts: bytes) -> bytes:
        h = hashlib.blake2b(key=self._secret, digest_size=32, person=tag)
        for p in parts:
            h.update(p)
        return h.digest()

    def _member_secret(self, q: QuorumId, node: int) -> bytes:
        return self._mac(b"member", _qbytes(q), node.to_bytes(8, "little"))

    def public_key_for(self, q: QuorumId) -> bytes:
        self.graph.index(q)
        return self._mac(b"public", _qbytes(q))

    def _share_block(self, q: QuorumId, d: bytes) -> bytes:
        # one XOF output holds the share tokens of every member slot
        return hashlib.shake_256(self._secret + b"share" + _qbytes(q) + d).digest(SHARE_BYTES * self.graph.quorum_size)

    def _slot_map(self, q: QuorumId) -> dict[int, int]:
        slots = self._slots.get(q)
        if slots is None:
            slots = {x: i for i, x in enumerate(self.graph.members(q))}
            self._slots[q] = slots
        return slots

    def _slot(self, q: QuorumId, node: int) -> int:
        try:
            return self._slot_map(q)[node]
        except KeyError:
            raise MembershipError(f"node {node} is not a member of {q}") from None

    def sign_share(self, node: int, q: QuorumId, payload: bytes) -> SignatureShare:
        slot = self._slot(q, node)
        d = digest(payload)
        return SignatureShare(node, q, d, self._share_block(q, d)[slot * SHARE_BYTES : (slot + 1) * SHARE_BYTES])

    def sign_shares(self, q: QuorumId, payload: bytes, signers: Iterable[int]) -> list[SignatureShare]:
        """Shares from several members at once; same tokens as repeated sign_share."""
        slots = self._slot_map(q)
        d = digest(payload)
        block = self._share_block(q, d)
        make = SignatureShare
        w = SHARE_BYTES
        try:
            return [make(node, q, d, block[slots[node] * w : slots[node] * w + w]) for node in signers]
        except KeyError as e:
            raise MembershipError(f"node {e.args[0]} is not a member of {q}") from None

    def combine_shares(self, q: QuorumId, payload: bytes, shares: Iterable[SignatureShare]) -> SignedMessage:
        """Combine shares into the quorum's signature on ``payload``.

        Shares for another quorum or message, from non-members, with bad
        tokens, or repeating a signer are discarded before counting.
        """
        slots = self._slot_map(q)
        d = digest(payload)
        block = self._share_block(q, d)
        w = SHARE_BYTES
        seen: set[int] = set()
        for signer, quorum, md, token in shares:
            if quorum != q or md != d or signer in seen:
                continue
            slot = slots.get(signer)
            if slot is not None and block[slot * w : slot * w + w] == token:
                seen.add(signer)
        need = threshold_for(len(slots))
        if len(seen) < need:
            raise ThresholdNotMet(len(seen), need)
        return SignedMessage(payload, q, self._mac(b"qsig", _qbytes(q), d))

    def verify(self, public_key: bytes, sm: SignedMessage) -> bool:
        try:
            expected_key = self.public_key_for(sm.quorum)
        except KeyError:
            return False
        if public_key != expected_key:
            return False
        return sm.quorum_signature == self._mac(b"qsig", _qbytes(sm.quorum), digest(sm.payload))

    def can_verify(self, node: int, q: QuorumId) -> bool:
        """Whether ``node`` knows q's public key: it is in q or a neighbour of q."""
        g = self.graph
        qi = g.index(q)
        mine = g.quorums_of_index(node)
        return qi in mine or any(p in mine for p in g.neighbors_index(qi))

    def verify_as(self, node: int, sm: SignedMessage) -> bool:
        if not self.can_verify(node, sm.quorum):
            raise VerificationUnavailable(f"node {node} does not hold the key of {sm.quorum}")
        return self.verify(self.public_key_for(sm.quorum), sm)


def dkg_setup(graph: QuorumGraph, seed: int) -> ThresholdScheme:
    """Trusted-setup stand-in for distributed key generation."""
    secret = hashlib.blake2b(f"dkg:{seed}".encode(), digest_size=32).digest()
    return ThresholdScheme(graph, secret)


@dataclass(frozen=True)
class EphemeralKeyPair:
    k_p: bytes
    k_s: bytes
    owner: int


@dataclass(frozen=True)
class SignedBlob:
    payload: bytes
    k_p: bytes
    tag: bytes


class EphemeralRegistry:
    """Per-trial registry of one-off key pairs (k_p -> k_s)."""

    def __init__(self):
        self._private: dict[bytes, bytes] = {}

    def ephemeral_keypair(self, owner: int, seed: int) -> EphemeralKeyPair:
        k_s = hashlib.blake2b(
            owner.to_bytes(8, "little") + seed.to_bytes(16, "little", signed=False),
            digest_size=32,
            person=b"eph-sk",
        ).digest()
        k_p = hashlib.blake2b(k_s, digest_size=32, person=b"eph-pk").digest()
        self._private[k_p] = k_s
        return EphemeralKeyPair(k_p, k_s, owner)

    def sign(self, k_s: bytes, payload: bytes) -> SignedBlob:
        k_p = hashlib.blake2b(k_s, digest_size=32, person=b"eph-pk").digest()
        tag = hashlib.blake2b(payload, key=k_s, digest_size=32).digest()
        return SignedBlob(payload, k_p, tag)

    def verify_ephemeral(self, k_p: bytes, blob: SignedBlob) -> bool:
        k_s = self._private.get(k_p)
        if k_s is None or blob.k_p != k_p:
            return False
        return blob.tag == hashlib.blake2b(blob.payload, key=k_s, digest_size=32).digest()
