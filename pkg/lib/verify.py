"""Publishing and checking annotated contracts.

A package climbs four verification levels:

1. signed source,
2. annotations that survive randomized testing (``check_level2``),
3. verification conditions discharged over a bounded box, shipped with the package,
4. a signed certificate binding those VC digests to the source.

``verify_standard`` re-checks whatever level a package claims and then applies
the local policy; ``verify_extended`` also demands signatures from the
policy's mandatory signers and coverage of its required spec ids.
"""
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from lib import vcgen
from lib.minilang import (
    Annotation,
    ArrayValue,
    Binary,
    Contract,
    For,
    Interpreter,
    Method,
    evaluate,
    free_names,
    loops,
    parse_annotations,
)
from lib.vcgen import VC, Discharge
from utils.constants import (
    CERTIFICATE_OVERHEAD,
    LEVEL2_ARRAY_LENGTH,
    LEVEL2_BUDGET,
    PCC_GEN_BYTES_PER_SECOND,
    PCC_GEN_INTERCEPT,
    PCC_VERIFY_BYTES_PER_SECOND,
    PCC_VERIFY_INTERCEPT,
    VERIFY_BOUND,
)
from utils.exceptions import DomainError, PackageFormatError, UnboundedLoopError, VerificationError
from utils.logger_config import configure_logger
from utils.utils import canonical_json, derive_seed, sha256_hex

logger = configure_logger(__name__)

PACKAGE_MAGIC = "VEIL-PACKAGE 1"
LEVEL2_ATTEMPT_FACTOR = 20


class Reason:
    MALFORMED_SOURCE = "malformed-source"
    LEVEL_BELOW_MINIMUM = "level-below-minimum"
    UNSIGNED = "unsigned"
    BAD_SIGNATURE = "bad-signature"
    COUNTEREXAMPLE = "counterexample"
    VC_MISMATCH = "vc-mismatch"
    VC_FAILED = "vc-failed"
    CERTIFICATE_INVALID = "certificate-invalid"
    UNPROVEN = "unproven"
    MISSING_TRUSTED_SIGNATURE = "missing-trusted-signature"
    UNTRUSTED_SIGNER = "untrusted-signer"
    MISSING_SPEC = "missing-spec"


# ---- keys ------------------------------------------------------------------


def _raw_public(key: Ed25519PublicKey) -> bytes:
    return key.public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)


@dataclass(frozen=True)
class TrustedSigner:
    name: str
    private_key: Ed25519PrivateKey = field(repr=False)

    @classmethod
    def from_seed(cls, name: str, seed: bytes) -> "TrustedSigner":
        return cls(name, Ed25519PrivateKey.from_private_bytes(derive_seed(seed, f"signer/{name}")))

    @property
    def public_key(self) -> Ed25519PublicKey:
        return self.private_key.public_key()

    @property
    def public_bytes(self) -> bytes:
        return _raw_public(self.public_key)

    def sign(self, message: bytes) -> bytes:
        return self.private_key.sign(message)


def _signature_valid(public: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True


class PackageSignature(NamedTuple):
    signer: str
    public_key: bytes
    signature: bytes


# ---- package types ---------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    source_digest: str
    vc_digests: tuple[str, ...]
    discharges: tuple[Discharge, ...]
    signer: str
    public_key: bytes
    signature: bytes = b""

    def body(self) -> bytes:
        return canonical_json(
            {
                "source": self.source_digest,
                "vcs": list(self.vc_digests),
                "discharges": [d.to_dict() for d in self.discharges],
                "signer": self.signer,
                "key": self.public_key.hex(),
            }
        ).encode()

    @property
    def size_bytes(self) -> int:
        return len(self.body()) + len(self.signature)

    def to_dict(self) -> dict:
        return {**json.loads(self.body()), "signature": self.signature.hex()}

    @classmethod
    def from_dict(cls, raw: dict) -> "Certificate":
        return cls(
            raw["source"],
            tuple(raw["vcs"]),
            tuple(Discharge.from_dict(d) for d in raw["discharges"]),
            raw["signer"],
            bytes.fromhex(raw["key"]),
            bytes.fromhex(raw["signature"]),
        )


@dataclass
class ContractPackage:
    source: str
    circuit_digest: str
    level: int = 1
    proofs: list[Discharge] | None = None
    certificate: Certificate | None = None
    signatures: list[PackageSignature] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        if not 1 <= self.level <= 4:
            raise PackageFormatError(f"verification level {self.level} is outside 1..4")
        if self.level >= 3 and self.proofs is None:
            raise PackageFormatError(f"a level-{self.level} package must carry proofs")
        if self.level == 4 and self.certificate is None:
            raise PackageFormatError("a level-4 package must carry a certificate")

    @property
    def source_digest(self) -> str:
        return sha256_hex(self.source.encode())

    @property
    def annotations(self) -> list[Annotation]:
        return parse_annotations(self.source)[1]

    @property
    def digest(self) -> str:
        """What package signatures cover."""
        return sha256_hex(
            canonical_json(
                {
                    "name": self.name,
                    "source": self.source_digest,
                    "circuit": self.circuit_digest,
                    "level": self.level,
                    "proofs": [d.digest for d in self.proofs or []],
                    "certificate": sha256_hex(self.certificate.body()) if self.certificate else None,
                }
            ).encode()
        )

    @property
    def proved_tags(self) -> set[str]:
        if not self.proofs:
            return set()
        return {tag for vc in gen_vcs(self) for tag in vc.tags if any(d.digest == vc.digest and d.holds for d in self.proofs)}


@dataclass(frozen=True)
class SecurityProfile:
    mandatory_signers: frozenset[str] = frozenset()
    required_spec_ids: frozenset[str] = frozenset()
    accept_unproven: bool = True
    min_level: int = 1
    trusted_keys: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "SecurityProfile":
        return cls(
            frozenset(raw.get("mandatory_signers", [])),
            frozenset(raw.get("required_spec_ids", [])),
            bool(raw.get("accept_unproven", True)),
            int(raw.get("min_level", 1)),
            dict(raw.get("trusted_keys", {})),
        )


@dataclass
class Verdict:
    accepted: bool
    reasons: list[str] = field(default_factory=list)
    counterexample: "Counterexample | None" = None
    discharges: list[Discharge] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.accepted

    def reject(self, reason: str):
        self.accepted = False
        if reason not in self.reasons:
            self.reasons.append(reason)


# ---- level 2: randomized testing -------------------------------------------


@dataclass(frozen=True)
class Counterexample:
    method: str
    inputs: dict[str, Any]
    result: int | None
    violated: str


@dataclass
class Level2Verdict:
    passed: bool
    tested: int
    counterexample: Counterexample | None = None
    exhausted: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def _holds(expr, env, old=None, result=None) -> bool:
    try:
        return bool(evaluate(expr, env, old, result))
    except (KeyError, IndexError):
        return False


def check_execution(
    contract: Contract,
    method_name: str,
    args: Mapping[str, Any],
    fields: Mapping[str, int] | None = None,
) -> Counterexample | None:
    """Runs one call and reports the first annotation it violates, if any."""
    method = contract.method(method_name)
    interpreter = Interpreter(contract)
    state = dict(interpreter.initial_fields() if fields is None else fields)
    args = {name: ArrayValue(value) if isinstance(value, (list, tuple)) else value for name, value in args.items()}
    try:
        run = interpreter.run(method_name, args, state)
    except (UnboundedLoopError, IndexError) as error:
        return Counterexample(method_name, _shown(args, state), None, str(error))
    if run.violations:
        return Counterexample(method_name, _shown(args, state), run.result, f"invariant {run.violations[0].invariant}")
    post_env = {**args, **run.state}
    for annotation in list(method.ensures) + list(contract.invariants):
        if not _holds(annotation.expr, post_env, {**args, **run.old}, run.result):
            return Counterexample(method_name, _shown(args, state), run.result, f"{annotation.kind.value} {annotation.text}")
    return None


def _shown(args: Mapping[str, Any], fields: Mapping[str, int]) -> dict[str, Any]:
    shown: dict[str, Any] = dict(fields)
    for name, value in args.items():
        shown[name] = [value[i] for i in sorted(value.cells)] if isinstance(value, ArrayValue) else value
    return shown


class _Sampler:
    def __init__(self, contract: Contract, seed: bytes):
        self.rng = np.random.default_rng(int.from_bytes(derive_seed(seed, "level2")[:8], "big"))
        constants = list(contract.constants.values())
        self.span = max([VERIFY_BOUND] + [2 * abs(c) for c in constants])
        edges = {0, 1, -1, 2, VERIFY_BOUND, -VERIFY_BOUND, LEVEL2_ARRAY_LENGTH}
        for c in constants:
            edges |= {c, c - 1, c + 1, -c}
        self.edges = sorted(edges)

    def value(self) -> int:
        if self.rng.random() < 0.3:
            return int(self.rng.choice(self.edges))
        return int(self.rng.integers(-self.span, self.span + 1))

    def array(self) -> ArrayValue:
        values = [self.value() for _ in range(LEVEL2_ARRAY_LENGTH)]
        return ArrayValue(values, fill=lambda _: self.value())

    def length(self) -> int:
        """Values that bound a loop are drawn small so a sample runs in bounded time."""
        return int(self.rng.integers(-1, 4 * LEVEL2_ARRAY_LENGTH + 1))


def _check_method(contract: Contract, method: Method, budget: int, sampler: _Sampler) -> Level2Verdict:
    interpreter = Interpreter(contract)
    constants = contract.constants
    mutable_fields = [f.name for f in contract.fields if f.name not in constants]
    bounds = {name for loop in loops(method.body) if isinstance(loop, For) and isinstance(loop.cond, Binary) for name in free_names(loop.cond.right)}
    tested = attempts = 0
    while tested < budget and attempts < budget * LEVEL2_ATTEMPT_FACTOR:
        attempts += 1
        args = {p.name: sampler.array() if p.is_array else sampler.length() if p.name in bounds else sampler.value() for p in method.params}
        fields = interpreter.initial_fields()
        if not method.is_constructor:
            fields |= {name: sampler.value() for name in mutable_fields}
        env = {**fields, **args}
        preconditions = list(method.requires) + ([] if method.is_constructor else list(contract.invariants))
        if not all(_holds(a.expr, env) for a in preconditions):
            continue
        tested += 1
        found = check_execution(contract, method.name, args, fields)
        if found is not None:
            logger.info(f"level 2: {contract.name}.{method.name} violates {found.violated} on {found.inputs}")
            return Level2Verdict(False, tested, found)
    exhausted = []
    if tested < budget:
        logger.warning(f"level 2: only {tested} of {budget} samples of {method.name} met its precondition")
        exhausted.append(method.name)
    return Level2Verdict(True, tested, exhausted=exhausted)


def check_level2(pkg: "ContractPackage | str", budget: int = LEVEL2_BUDGET, seed: bytes = b"") -> Level2Verdict:
    source = pkg if isinstance(pkg, str) else pkg.source
    contract = parse_annotations(source)[0]
    sampler = _Sampler(contract, seed)
    total = Level2Verdict(True, 0)
    for method in contract.methods:
        verdict = _check_method(contract, method, budget, sampler)
        total.tested += verdict.tested
        total.exhausted += verdict.exhausted
        if not verdict:
            total.passed = False
            total.counterexample = verdict.counterexample
            return total
    return total


# ---- levels 3 and 4 --------------------------------------------------------


def gen_vcs(pkg: "ContractPackage | str") -> list[VC]:
    return vcgen.gen_vcs(pkg if isinstance(pkg, str) else pkg.source)


def discharge_bounded(vcs: Sequence[VC], bound: int = VERIFY_BOUND) -> list[Discharge]:
    return vcgen.discharge_bounded(vcs, bound)


def make_certificate(pkg: ContractPackage, signer: TrustedSigner) -> Certificate:
    if pkg.proofs is None:
        raise PackageFormatError("a certificate needs the level-3 proofs")
    vcs = gen_vcs(pkg)
    unsigned = Certificate(pkg.source_digest, tuple(vc.digest for vc in vcs), tuple(pkg.proofs), signer.name, signer.public_bytes)
    return replace(unsigned, signature=signer.sign(unsigned.body()))


def check_certificate(pkg: ContractPackage) -> bool:
    certificate = pkg.certificate
    if certificate is None:
        return False
    if certificate.source_digest != pkg.source_digest:
        logger.warning("certificate was issued for a different source")
        return False
    try:
        vcs = gen_vcs(pkg)
    except VerificationError:
        return False
    if tuple(vc.digest for vc in vcs) != certificate.vc_digests:
        logger.warning("regenerated VCs do not match the certificate")
        return False
    proved = {d.digest for d in certificate.discharges if d.holds}
    if not set(certificate.vc_digests) <= proved:
        return False
    return _signature_valid(certificate.public_key, certificate.signature, certificate.body())


def sign_package(pkg: ContractPackage, signer: TrustedSigner) -> ContractPackage:
    pkg.signatures.append(PackageSignature(signer.name, signer.public_bytes, signer.sign(pkg.digest.encode())))
    return pkg


def build_package(
    source: str,
    circuit_digest: str,
    level: int = 4,
    signer: TrustedSigner | None = None,
    name: str = "",
    bound: int = VERIFY_BOUND,
) -> ContractPackage:
    """Parses, proves and certifies source up to level, signing the result when a signer is given."""
    parse_annotations(source)
    proofs = discharge_bounded(gen_vcs(source), bound) if level >= 3 else None
    pkg = ContractPackage(source, circuit_digest, min(level, 3), proofs, name=name)
    if level == 4:
        if signer is None:
            raise PackageFormatError("a level-4 package needs a certificate signer")
        pkg = ContractPackage(source, circuit_digest, 4, proofs, make_certificate(pkg, signer), name=name)
    if signer is not None:
        sign_package(pkg, signer)
    logger.info(f"built level-{level} package {name or pkg.digest[:12]}")
    return pkg


# ---- verification ----------------------------------------------------------


def _check_proofs(pkg: ContractPackage, verdict: Verdict):
    vcs = gen_vcs(pkg)
    embedded = {d.digest: d for d in pkg.proofs or []}
    if {vc.digest for vc in vcs} != set(embedded):
        verdict.reject(Reason.VC_MISMATCH)
        return
    verdict.discharges = [embedded[vc.digest] for vc in vcs]
    if not all(d.holds for d in verdict.discharges):
        verdict.reject(Reason.VC_FAILED)


def verify_standard(pkg: ContractPackage, policy: SecurityProfile = SecurityProfile(), seed: bytes = b"") -> Verdict:
    verdict = Verdict(True)
    try:
        annotations = pkg.annotations
    except VerificationError as error:
        logger.error(f"package source does not parse: {error}")
        verdict.reject(Reason.MALFORMED_SOURCE)
        return verdict

    if pkg.level < policy.min_level:
        verdict.reject(Reason.LEVEL_BELOW_MINIMUM)
    if not all(_signature_valid(s.public_key, s.signature, pkg.digest.encode()) for s in pkg.signatures):
        verdict.reject(Reason.BAD_SIGNATURE)
    if pkg.level == 1 and not pkg.signatures:
        verdict.reject(Reason.UNSIGNED)
    if pkg.level >= 2:
        tested = check_level2(pkg, seed=seed)
        if not tested:
            verdict.counterexample = tested.counterexample
            verdict.reject(Reason.COUNTEREXAMPLE)
    if pkg.level >= 3:
        _check_proofs(pkg, verdict)
    if pkg.level == 4 and not check_certificate(pkg):
        verdict.reject(Reason.CERTIFICATE_INVALID)
    if not policy.accept_unproven and (pkg.level < 3 or not annotations):
        verdict.reject(Reason.UNPROVEN)

    logger.info(f"standard verification of {pkg.name or pkg.digest[:12]}: {'accepted' if verdict else ', '.join(verdict.reasons)}")
    return verdict


def verify_extended(
    pkg: ContractPackage,
    policy: SecurityProfile,
    trusted: Mapping[str, Ed25519PublicKey] | None = None,
    seed: bytes = b"",
) -> Verdict:
    verdict = verify_standard(pkg, policy, seed)
    # a name may be trusted under several keys; adding keys never revokes one
    keys: dict[str, set[bytes]] = {}
    for name, key in policy.trusted_keys.items():
        keys.setdefault(name, set()).add(bytes.fromhex(key))
    for name, key in (trusted or {}).items():
        keys.setdefault(name, set()).add(_raw_public(key))
    digest = pkg.digest.encode()
    for signer in sorted(policy.mandatory_signers):
        signed = [s for s in pkg.signatures if s.signer == signer]
        if not signed:
            verdict.reject(Reason.MISSING_TRUSTED_SIGNATURE)
            continue
        vouched = [s for s in signed if s.public_key in keys.get(signer, set())]
        if not vouched:
            logger.warning(f"{signer} signed with a key outside the trust store")
            verdict.reject(Reason.UNTRUSTED_SIGNER)
            continue
        if not any(_signature_valid(s.public_key, s.signature, digest) for s in vouched):
            verdict.reject(Reason.MISSING_TRUSTED_SIGNATURE)
    if policy.required_spec_ids and not policy.required_spec_ids <= pkg.proved_tags:
        verdict.reject(Reason.MISSING_SPEC)
    if not verdict:
        logger.error(f"extended verification rejected the package: {', '.join(verdict.reasons)}")
    return verdict


# ---- cost estimates --------------------------------------------------------


class PccEstimate(NamedTuple):
    gen_seconds: float
    verify_seconds: float
    certified_size_bytes: float


def estimate_pcc_times(bytecode_size: int) -> PccEstimate:
    if bytecode_size < 0:
        raise DomainError(f"bytecode size must be nonnegative, got {bytecode_size}")
    return PccEstimate(
        PCC_GEN_INTERCEPT + bytecode_size / PCC_GEN_BYTES_PER_SECOND,
        PCC_VERIFY_INTERCEPT + bytecode_size / PCC_VERIFY_BYTES_PER_SECOND,
        CERTIFICATE_OVERHEAD * bytecode_size,
    )


def certificate_overhead(pkg: ContractPackage) -> float:
    """Certificate size over the size of the serialized proofs it wraps."""
    if pkg.certificate is None or not pkg.proofs:
        return 0.0
    proof_bytes = len(canonical_json([d.to_dict() for d in pkg.proofs]).encode())
    return pkg.certificate.size_bytes / proof_bytes


# ---- files -----------------------------------------------------------------


def dump_package(pkg: ContractPackage) -> str:
    header = {
        "name": pkg.name,
        "level": pkg.level,
        "circuit": pkg.circuit_digest,
        "source": pkg.source_digest,
        "signers": [s.signer for s in pkg.signatures],
    }
    sections = [PACKAGE_MAGIC, canonical_json(header), "%% source", pkg.source.rstrip("\n")]
    if pkg.proofs is not None:
        sections += ["%% proofs", *(canonical_json(d.to_dict()) for d in pkg.proofs)]
    if pkg.certificate is not None:
        sections += ["%% certificate", canonical_json(pkg.certificate.to_dict())]
    sections += ["%% signatures", *(f"{s.signer} {s.public_key.hex()} {s.signature.hex()}" for s in pkg.signatures)]
    return "\n".join(sections) + "\n"


def load_package(text: str) -> ContractPackage:
    lines = text.splitlines()
    if not lines or lines[0] != PACKAGE_MAGIC:
        raise PackageFormatError("not a contract package")
    sections: dict[str, list[str]] = {}
    current = None
    for line in lines[2:]:
        if line.startswith("%% "):
            current = line[3:]
            sections[current] = []
        elif current is None:
            raise PackageFormatError("text before the first section")
        else:
            sections[current].append(line)
    try:
        header = json.loads(lines[1])
        source = "\n".join(sections["source"]) + "\n"
        proofs = [Discharge.from_dict(json.loads(line)) for line in sections["proofs"]] if "proofs" in sections else None
        certificate = Certificate.from_dict(json.loads(sections["certificate"][0])) if "certificate" in sections else None
        signatures = []
        for line in sections.get("signatures", []):
            signer, public, signature = line.split()
            signatures.append(PackageSignature(signer, bytes.fromhex(public), bytes.fromhex(signature)))
        pkg = ContractPackage(source, header["circuit"], header["level"], proofs, certificate, signatures, header.get("name", ""))
    except (ValueError, KeyError, IndexError) as error:
        raise PackageFormatError(f"malformed package: {error}") from error
    if pkg.source_digest != header["source"]:
        logger.warning("package header digest does not match its source section")
    return pkg


def dump_trust_store(keys: Mapping[str, Ed25519PublicKey], path: str | os.PathLike):
    Path(path).write_text(json.dumps({name: _raw_public(key).hex() for name, key in sorted(keys.items())}, indent=2))


def load_trust_store(path: str | os.PathLike) -> dict[str, Ed25519PublicKey]:
    try:
        raw = json.loads(Path(path).read_text())
        return {name: Ed25519PublicKey.from_public_bytes(bytes.fromhex(key)) for name, key in raw.items()}
    except (ValueError, AttributeError) as error:
        raise PackageFormatError(f"{path}: malformed trust store") from error


def load_policy(path: str | os.PathLike) -> SecurityProfile:
    try:
        return SecurityProfile.from_dict(json.loads(Path(path).read_text()))
    except (ValueError, AttributeError) as error:
        raise PackageFormatError(f"{path}: malformed policy") from error
