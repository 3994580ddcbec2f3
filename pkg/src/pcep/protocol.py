"""One-step reconciliation: Alice publishes check bits, Bob (or Eve) decodes.

Alice encodes her sifted key systematically so that the codeword on the key
positions A *is* the key. Only the codeword bits on R and B travel over the
public channel; Bob treats them as noiseless, his own sifted key as BSC(p_m)
observations of A, and runs SC decoding with the B source bits frozen to zero.
"""

from __future__ import annotations

import base64
import hashlib
import json
import secrets
from dataclasses import dataclass

import numpy as np

from pcep.channel_math import QBER_THRESHOLD, capacity_summary
from pcep.codec import FrozenSpec, bsc_llrs, noiseless_llrs, sc_decode, systematic_encode
from pcep.structure import CodeStructure, InadmissibleQBERError

DEFAULT_SAMPLE_FRACTION = 0.1


class DigestMismatchError(RuntimeError):
    """The two parties derived different code structures."""


class QBERAbortError(InadmissibleQBERError):
    """Estimated QBER is above the security threshold; the block is abandoned."""


@dataclass(frozen=True)
class PublicMessage:
    chk1: np.ndarray
    chk2: np.ndarray
    block_id: int
    structure_digest: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "block_id": self.block_id,
                "digest": self.structure_digest,
                "chk1": _pack(self.chk1),
                "chk2": _pack(self.chk2),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str, structure: CodeStructure) -> PublicMessage:
        """Bit counts are not on the wire; they come from the receiver's structure."""
        d = json.loads(text)
        return cls(
            chk1=_unpack(d["chk1"], structure.set_r.size),
            chk2=_unpack(d["chk2"], structure.set_b.size),
            block_id=int(d["block_id"]),
            structure_digest=d["digest"],
        )


@dataclass(frozen=True)
class ReconciliationResult:
    final_key: np.ndarray
    success: bool | None = None


def _pack(bits: np.ndarray) -> str:
    packed = np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")
    return base64.b64encode(packed.tobytes()).decode("ascii")


def _unpack(text: str, nbits: int) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(text), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")
    if bits.size < nbits or np.any(bits[nbits:]):
        raise ValueError(f"payload does not hold exactly {nbits} bits")
    return bits[:nbits].copy()


def random_bits(n: int, seed: int | bytes | None = None) -> np.ndarray:
    """n uniform bits from SHAKE-256 keyed by ``seed``, or from the OS if None."""
    nbytes = (n + 7) // 8
    if seed is None:
        stream = secrets.token_bytes(nbytes)
    else:
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "little", signed=True)
        stream = hashlib.shake_256(b"pcep-r-bits" + seed).digest(nbytes)
    return np.unpackbits(np.frombuffer(stream, np.uint8), bitorder="little")[:n]


def estimate_qber(alice_sample: np.ndarray, bob_sample: np.ndarray) -> float:
    a = np.asarray(alice_sample)
    b = np.asarray(bob_sample)
    if a.shape != b.shape:
        raise ValueError(f"sample lengths differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty sample")
    return np.count_nonzero(a != b) / a.size


def check_admissible(p_m: float) -> None:
    if p_m > 0.5 or not capacity_summary(p_m).admissible:
        raise QBERAbortError(f"estimated QBER {p_m:.4g} exceeds {QBER_THRESHOLD}")


def parameter_estimation(
    ka_raw: np.ndarray,
    kb_raw: np.ndarray,
    fraction: float = DEFAULT_SAMPLE_FRACTION,
    seed: int | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Disclose a random ``fraction`` of positions, estimate p_m, drop them.

    Returns ``(p_m, ka_rest, kb_rest)`` and raises :class:`QBERAbortError`
    when the estimate is not admissible.
    """
    ka_raw = np.asarray(ka_raw, dtype=np.uint8)
    kb_raw = np.asarray(kb_raw, dtype=np.uint8)
    if ka_raw.shape != kb_raw.shape:
        raise ValueError("sifted keys differ in length")
    n_sample = max(1, int(round(fraction * ka_raw.size)))
    picked = np.random.default_rng(seed).choice(ka_raw.size, n_sample, replace=False)
    keep = np.ones(ka_raw.size, dtype=bool)
    keep[picked] = False
    p_m = estimate_qber(ka_raw[picked], kb_raw[picked])
    check_admissible(p_m)
    return p_m, ka_raw[keep], kb_raw[keep]


def _check_key(structure: CodeStructure, key: np.ndarray, who: str) -> np.ndarray:
    key = np.asarray(key, dtype=np.uint8).ravel()
    if key.size != structure.set_a.size:
        raise ValueError(f"{who} key has {key.size} bits, structure needs {structure.set_a.size}")
    return key


def alice_prepare(
    structure: CodeStructure,
    ka: np.ndarray,
    rng_seed: int | bytes | None = None,
    block_id: int = 0,
    r_bits: np.ndarray | None = None,
) -> tuple[PublicMessage, np.ndarray]:
    """Encode one block; returns the public check bits and Alice's final key.

    The R source bits are drawn from ``rng_seed`` unless given explicitly in
    ``r_bits``; B source bits are zero.
    """
    ka = _check_key(structure, ka, "Alice's")
    if r_bits is None:
        r_bits = random_bits(structure.set_r.size, rng_seed)
    r_bits = np.asarray(r_bits, dtype=np.uint8)
    if r_bits.size != structure.set_r.size:
        raise ValueError("need one random bit per index in R")
    frozen = FrozenSpec(
        np.concatenate([structure.set_r, structure.set_b]),
        np.concatenate([r_bits, np.zeros(structure.set_b.size, np.uint8)]),
    )
    _, x = systematic_encode(ka, structure.set_a, frozen)
    msg = PublicMessage(
        chk1=x[structure.set_r],
        chk2=x[structure.set_b],
        block_id=block_id,
        structure_digest=structure.digest(),
    )
    return msg, x[structure.set_a]


def _decode(
    structure: CodeStructure,
    key: np.ndarray,
    p: float,
    msg: PublicMessage,
    truth: np.ndarray | None,
) -> ReconciliationResult:
    llr = np.empty(structure.length)
    llr[structure.set_r] = noiseless_llrs(msg.chk1)
    llr[structure.set_b] = noiseless_llrs(msg.chk2)
    llr[structure.set_a] = bsc_llrs(key, p)
    _, x_hat = sc_decode(llr, FrozenSpec.zeros(structure.set_b))
    final = x_hat[structure.set_a]
    success = None if truth is None else bool(np.array_equal(final, truth))
    return ReconciliationResult(final_key=final, success=success)


def bob_reconcile(
    structure: CodeStructure,
    kb: np.ndarray,
    msg: PublicMessage,
    truth: np.ndarray | None = None,
) -> ReconciliationResult:
    """Recover Alice's key from Bob's sifted key and the check bits.

    ``truth`` (Alice's key) is only for simulations; it sets ``success``.
    """
    kb = _check_key(structure, kb, "Bob's")
    if msg.structure_digest != structure.digest():
        raise DigestMismatchError(
            f"message digest {msg.structure_digest} != local {structure.digest()}"
        )
    return _decode(structure, kb, structure.p_m, msg, truth)


def eve_attack(
    structure: CodeStructure,
    ke: np.ndarray,
    msg: PublicMessage,
    truth: np.ndarray | None = None,
) -> ReconciliationResult:
    """Eve's best in-model guess: Bob's decoder with BSC(p_w) observations."""
    ke = _check_key(structure, ke, "Eve's")
    return _decode(structure, ke, structure.p_w, msg, truth)


class Alice:
    def __init__(self, structure: CodeStructure, seed: int | None = None):
        self.structure = structure
        self._seed = seed
        self._block = 0

    def prepare(self, ka: np.ndarray) -> tuple[PublicMessage, np.ndarray]:
        seed = None if self._seed is None else f"{self._seed}:{self._block}".encode()
        out = alice_prepare(self.structure, ka, seed, block_id=self._block)
        self._block += 1
        return out


class Bob:
    def __init__(self, structure: CodeStructure):
        self.structure = structure

    def reconcile(self, kb: np.ndarray, msg: PublicMessage) -> ReconciliationResult:
        return bob_reconcile(self.structure, kb, msg)


class Eve:
    def __init__(self, structure: CodeStructure):
        self.structure = structure

    def attack(self, ke: np.ndarray, msg: PublicMessage) -> ReconciliationResult:
        return eve_attack(self.structure, ke, msg)
