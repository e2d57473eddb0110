"""The six-operation signature scheme plus the certificate mechanism.

Identities are opaque byte strings. A signer enrolled at lower-level
authority T_i with secret kappa_i receives the one-time key pair

    s_0 = H0(id, 0)^kappa_i        s_1 = H0(id, 1)^kappa_i

and signs a message m as sigma = s_0 * s_1^h with
h = H1(m, id, cert_bytes(T_i)). Signatures aggregate by multiplication in
G1; verification groups signers by their issuing authority and checks one
pairing equation whose cost is l+1 pairings for l authorities, independent
of the number of signers.

All hash invocations go through a HashSuite so a random-oracle simulator
can swap in programmed tables; the default suite instantiates the oracles
from the engine's hash functions under fixed domain-separation tags.
"""

import hashlib
import secrets
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

from .encoding import length_prefixed
from .errors import EmptyInput, KeyMismatch

DOMAIN_H0 = b"MTA-OTIBAS-H0"
DOMAIN_H1 = b"MTA-OTIBAS-H1"
DOMAIN_CERT = b"MTA-OTIBAS-CERT"


@dataclass(frozen=True)
class HashSuite:
    """The scheme's three hash oracles.

    identity_point(identity, bit) -> G1        (H0)
    message_scalar(message, identity, cert_bytes) -> int in [1, q-1]  (H1)
    cert_point(payload) -> G1                  (certificate hashing)
    """

    identity_point: Callable[[bytes, int], object]
    message_scalar: Callable[[bytes, bytes, bytes], int]
    cert_point: Callable[[bytes], object]


def engine_hashes(engine) -> HashSuite:
    """Random-oracle instantiation from the engine's hash functions."""
    return HashSuite(
        identity_point=lambda ident, bit: engine.hash_to_g1(DOMAIN_H0, ident + bytes([bit])),
        message_scalar=lambda msg, ident, cert: engine.hash_to_scalar(
            DOMAIN_H1, length_prefixed(msg, ident, cert)
        ),
        cert_point=lambda payload: engine.hash_to_g1(DOMAIN_CERT, payload),
    )


@dataclass(frozen=True)
class SystemParams:
    """Public output of root setup: backend id and the master public key."""

    backend: str
    y: object  # G2 element, g2^kappa


@dataclass(frozen=True)
class MasterSecret:
    kappa: int


@dataclass(frozen=True)
class TASecret:
    kappa_i: int


@dataclass(frozen=True)
class TARecord:
    """A lower-level authority: identity, public key, root-signed certificate."""

    ta_identity: bytes
    y_i: object  # G2 element, g2^kappa_i
    cert: object  # G1 element, cert-hash(payload)^kappa

    def payload(self, engine) -> bytes:
        """The bytes the root signs: identity framed with the public key."""
        return length_prefixed(self.ta_identity, engine.encode_g2(self.y_i))

    def cert_bytes(self, engine) -> bytes:
        """Canonical certificate bytes as hashed into every signature."""
        return length_prefixed(
            self.ta_identity, engine.encode_g2(self.y_i), engine.encode_g1(self.cert)
        )

    def fingerprint(self, engine) -> bytes:
        return hashlib.sha256(b"MTAO-TA" + self.cert_bytes(engine)).digest()


@dataclass(frozen=True)
class SignerKey:
    """One-time private key: two G1 components bound to (identity, authority)."""

    signer_id: bytes
    ta_fingerprint: bytes
    s0: object
    s1: object


@dataclass(frozen=True)
class Signature:
    sigma: object  # G1 element


@dataclass(frozen=True)
class AggregateBundle:
    """Verification input: signers grouped by issuing authority, plus the
    aggregate. Group boundaries partition the signer list; each signer is an
    (identity, message) pair."""

    groups: Tuple[Tuple[TARecord, Tuple[Tuple[bytes, bytes], ...]], ...]
    omega: object  # G1 element

    @staticmethod
    def build(groups: Sequence[Tuple[TARecord, Sequence[Tuple[bytes, bytes]]]], omega) -> "AggregateBundle":
        frozen = tuple((ta, tuple((bytes(i), bytes(m)) for i, m in signers)) for ta, signers in groups)
        return AggregateBundle(groups=frozen, omega=omega)

    def signer_count(self) -> int:
        return sum(len(signers) for _, signers in self.groups)


@dataclass
class VerifyResult:
    """Outcome of verification with the pairing bill attached."""

    valid: bool
    reason: str = ""
    pairings_main: int = 0
    pairings_certificates: int = 0

    def __bool__(self) -> bool:
        return self.valid


# ---------------------------------------------------------------------------
# Algorithms


def root_setup(engine, rng) -> Tuple[MasterSecret, SystemParams]:
    """Sample the master secret and publish the master public key."""
    kappa = engine.random_scalar(rng)
    return MasterSecret(kappa), SystemParams(backend=engine.backend, y=engine.g2 ** kappa)


def lowerlevel_setup(engine, params: SystemParams, master: MasterSecret, ta_identity: bytes, rng,
                     hashes: Optional[HashSuite] = None) -> Tuple[TASecret, TARecord]:
    """Enroll a lower-level authority: fresh keypair plus a root-signed
    certificate over (identity, public key)."""
    if not ta_identity:
        raise ValueError("authority identity must be non-empty")
    hashes = hashes or engine_hashes(engine)
    kappa_i = engine.random_scalar(rng)
    y_i = engine.g2 ** kappa_i
    payload = length_prefixed(bytes(ta_identity), engine.encode_g2(y_i))
    cert = hashes.cert_point(payload) ** master.kappa
    return TASecret(kappa_i), TARecord(ta_identity=bytes(ta_identity), y_i=y_i, cert=cert)


def verify_certificate(engine, params: SystemParams, ta: TARecord,
                       hashes: Optional[HashSuite] = None) -> bool:
    """Check the root's signature on an authority record:
    pair(cert, g2) == pair(cert-hash(payload), y)."""
    hashes = hashes or engine_hashes(engine)
    h = hashes.cert_point(ta.payload(engine))
    return engine.pair(ta.cert, engine.g2) == engine.pair(h, params.y)


def extract(engine, ta_secret: TASecret, ta: TARecord, signer_id: bytes,
            hashes: Optional[HashSuite] = None) -> SignerKey:
    """Derive a signer's one-time key from its identity under an authority."""
    if not signer_id:
        raise ValueError("signer identity must be non-empty")
    hashes = hashes or engine_hashes(engine)
    id0 = hashes.identity_point(bytes(signer_id), 0)
    id1 = hashes.identity_point(bytes(signer_id), 1)
    return SignerKey(
        signer_id=bytes(signer_id),
        ta_fingerprint=ta.fingerprint(engine),
        s0=id0 ** ta_secret.kappa_i,
        s1=id1 ** ta_secret.kappa_i,
    )


def key_is_well_formed(engine, key: SignerKey, ta: TARecord,
                       hashes: Optional[HashSuite] = None) -> bool:
    """Public check that both key components are consistent with the
    authority's public key: pair(s_b, g2) == pair(H0(id, b), y_i)."""
    hashes = hashes or engine_hashes(engine)
    for bit, s in ((0, key.s0), (1, key.s1)):
        idb = hashes.identity_point(key.signer_id, bit)
        if engine.pair(s, engine.g2) != engine.pair(idb, ta.y_i):
            return False
    return True


def signature_hash(engine, message: bytes, signer_id: bytes, ta: TARecord,
                   hashes: Optional[HashSuite] = None) -> int:
    """The per-signature scalar h = H1(message, identity, certificate)."""
    hashes = hashes or engine_hashes(engine)
    return hashes.message_scalar(bytes(message), bytes(signer_id), ta.cert_bytes(engine))


def sign(engine, key: SignerKey, ta: TARecord, message: bytes,
         hashes: Optional[HashSuite] = None) -> Signature:
    """Raw signing: sigma = s0 * s1^h. Deterministic and stateless; the
    one-time discipline lives in the key store wrapper."""
    if key.ta_fingerprint != ta.fingerprint(engine):
        raise KeyMismatch("key was not issued under this authority record")
    h = signature_hash(engine, message, key.signer_id, ta, hashes)
    return Signature(sigma=key.s0 * key.s1 ** h)


def aggregate(engine, signatures: Sequence[Signature]):
    """Multiply signatures into the aggregate element. Order-independent."""
    sigs = list(signatures)
    if not sigs:
        raise EmptyInput("nothing to aggregate")
    omega = sigs[0].sigma
    for s in sigs[1:]:
        omega = omega * s.sigma
    return omega


def verify(engine, params: SystemParams, bundle: AggregateBundle,
           check_certificates: bool = True, hashes: Optional[HashSuite] = None,
           rng=None) -> VerifyResult:
    """Verify an aggregate bundle.

    Three gates, all of which must pass:
      1. no (identity, authority) pair appears twice (one-time semantics);
      2. every authority's certificate verifies under params (skippable for
         pre-validated registries via check_certificates=False);
      3. the aggregate equation
         pair(omega, g2) == prod_i pair(prod_j id_{j,0} * id_{j,1}^{h_j}, y_i).

    Certificate equations are batched into one product with random weights
    (2 pairing evaluations per authority); the main equation is one product
    of l+1 evaluations regardless of the signer count.
    """
    hashes = hashes or engine_hashes(engine)
    if not bundle.groups:
        return VerifyResult(False, reason="empty bundle")
    if any(not signers for _, signers in bundle.groups):
        return VerifyResult(False, reason="empty authority group")

    seen = set()
    for ta, signers in bundle.groups:
        fp = ta.fingerprint(engine)
        for ident, _ in signers:
            if not ident:
                return VerifyResult(False, reason="empty signer identity")
            if (ident, fp) in seen:
                return VerifyResult(False, reason="duplicate (identity, authority) pair")
            seen.add((ident, fp))

    l = len(bundle.groups)
    pairings_certs = 0
    if check_certificates:
        # prod_i [pair(cert_i^-1, g2) * pair(cert-hash_i, y)]^rho_i == 1 with
        # fresh random weights rho_i, so independent failures cannot cancel
        terms = []
        for ta, _ in bundle.groups:
            rho = rng.randrange(1, engine.order) if rng is not None else 1 + secrets.randbelow(engine.order - 1)
            h = hashes.cert_point(ta.payload(engine))
            terms.append((ta.cert.inverse() ** rho, engine.g2))
            terms.append((h ** rho, params.y))
        pairings_certs = 2 * l
        if engine.multi_pair(terms) != engine.identity_gt:
            return VerifyResult(False, reason="certificate check failed",
                                pairings_certificates=pairings_certs)

    # main equation: pair(omega^-1, g2) * prod_i pair(inner_i, y_i) == 1
    terms = [(bundle.omega.inverse(), engine.g2)]
    for ta, signers in bundle.groups:
        cert_b = ta.cert_bytes(engine)
        inner = None
        for ident, message in signers:
            h = hashes.message_scalar(message, ident, cert_b)
            contrib = hashes.identity_point(ident, 0) * hashes.identity_point(ident, 1) ** h
            inner = contrib if inner is None else inner * contrib
        terms.append((inner, ta.y_i))
    ok = engine.multi_pair(terms) == engine.identity_gt
    return VerifyResult(
        valid=ok,
        reason="" if ok else "aggregate equation failed",
        pairings_main=l + 1,
        pairings_certificates=pairings_certs,
    )
