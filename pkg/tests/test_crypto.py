import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkfl.crypto import (
    ORDER,
    GroupElement,
    Scalar,
    combine,
    commit_vector,
    hash_commit,
    keygen,
    multi_scalar_mul,
    setup_params,
    sign,
    tagged_hash,
    verify_opening,
    verify_sig,
)
from zkfl.crypto import _ristretto as pure
from zkfl.crypto._backend import BACKEND, kernel
from zkfl.errors import CryptoError, DecodeError

# Encodings of k·B for k = 0..4, from the ristretto255 test vectors.
GENERATOR_MULTIPLES = [
    "0000000000000000000000000000000000000000000000000000000000000000",
    "e2f2ae0a6abc4e71a884a961c500515f58e30b6aa582dd8db6a65945e08d2d76",
    "6a493210f7499cd17fecb510ae0cea23a110e8d5b901f8acadd3095c73a3b919",
    "94741f5d5d52755ece4f23f044ee27d5d1ea1e2bd196b462166b16152a9d0259",
    "da80862773358b466ffadfe0b3293ab3d9fd53c5ea6c955358f568322daf6a57",
]

scalars = st.integers(min_value=0, max_value=ORDER - 1)


def rng(seed=0):
    return np.random.default_rng(seed)


@pytest.mark.parametrize("k", range(5))
def test_generator_multiples_match_vectors(k):
    assert GroupElement.base_mul(k).to_bytes().hex() == GENERATOR_MULTIPLES[k]
    assert pure.mul_base(Scalar(k).to_bytes()).hex() == GENERATOR_MULTIPLES[k]


@pytest.mark.parametrize("bad", ["01" + "00" * 31, "ff" * 32, "ed" + "ff" * 30 + "7f"])
def test_non_canonical_encodings_rejected(bad):
    with pytest.raises(DecodeError):
        GroupElement.from_bytes(bytes.fromhex(bad))
    assert not pure.is_valid(bytes.fromhex(bad))


def test_scalar_rejects_non_canonical_bytes():
    with pytest.raises(DecodeError):
        Scalar.from_bytes(ORDER.to_bytes(32, "little"))
    with pytest.raises(DecodeError):
        Scalar.from_bytes(b"\x01" * 31)


@settings(max_examples=25, deadline=None)
@given(scalars, scalars)
def test_group_law(a, b):
    A, B = GroupElement.base_mul(a), GroupElement.base_mul(b)
    assert A + B == GroupElement.base_mul((a + b) % ORDER)
    assert A - A == GroupElement.identity()
    assert GroupElement.generator() * a == A
    assert -A + A == GroupElement.identity()


@settings(max_examples=20, deadline=None)
@given(scalars)
def test_scalar_field(a):
    s = Scalar(a)
    assert (s + (-s)).value == 0
    if a:
        assert (s * s.inverse()).value == 1
    assert Scalar.from_bytes(s.to_bytes()) == s


def test_fallback_matches_native_kernel():
    r = rng(1)
    pts = [GroupElement.hash_to_group(b"t", bytes([i])) for i in range(9)]
    ks = [Scalar.random(r) for _ in range(9)]
    buf_s = b"".join(k.to_bytes() for k in ks)
    buf_p = b"".join(p.to_bytes() for p in pts)
    expected = multi_scalar_mul(ks, pts).to_bytes()
    assert pure.msm(buf_s, buf_p) == expected
    assert pure.PointTable(buf_p).msm(buf_s) == expected
    u = r.bytes(64)
    assert pure.from_uniform(u) == kernel.from_uniform(u)
    assert pure.add(buf_p[:32], buf_p[32:64]) == (pts[0] + pts[1]).to_bytes()
    assert pure.mul(buf_p[:32], buf_s[:32]) == (pts[0] * ks[0]).to_bytes()


def test_pure_python_subprocess_agrees():
    code = (
        "from zkfl.crypto import BACKEND, GroupElement, setup_params, commit_vector;"
        "p = setup_params(8, b'x');"
        "print(BACKEND, commit_vector(p, list(range(8)), 5).to_bytes().hex(),"
        " GroupElement.hash_to_group(b't', b'abc').to_bytes().hex())"
    )
    env = dict(os.environ, ZKFL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, c_hex, h_hex = out.stdout.split()
    assert backend == "python"
    p = setup_params(8, b"x")
    assert c_hex == commit_vector(p, list(range(8)), 5).to_bytes().hex()
    assert h_hex == GroupElement.hash_to_group(b"t", b"abc").to_bytes().hex()


def test_backend_reported():
    assert BACKEND in ("rust", "python")


def test_pedersen_homomorphism_and_binding():
    params = setup_params(16, b"seed")
    r = rng(2)
    v1 = [int(x) for x in r.integers(-1000, 1000, 16)]
    v2 = [int(x) for x in r.integers(-1000, 1000, 16)]
    r1, r2 = Scalar.random(r), Scalar.random(r)
    enc = lambda v: [x % ORDER for x in v]
    c1 = commit_vector(params, enc(v1), r1)
    c2 = commit_vector(params, enc(v2), r2)
    agg = combine([c1, c2], [3, 5])
    summed = [(3 * a + 5 * b) % ORDER for a, b in zip(v1, v2)]
    assert verify_opening(params, agg, summed, r1 * 3 + r2 * 5)
    assert not verify_opening(params, agg, [(summed[0] + 1) % ORDER] + summed[1:], r1 * 3 + r2 * 5)
    assert not verify_opening(params, c1, enc(v1), r1 + 1)
    assert not verify_opening(params, c1, enc(v1)[:-1], r1)
    with pytest.raises(CryptoError):
        commit_vector(params, [0] * 15, r1)


def test_pedersen_setup_is_deterministic_and_independent():
    a, b = setup_params(8, b"s"), setup_params(8, b"s")
    assert a.to_bytes() == b.to_bytes()
    assert setup_params(8, b"t").to_bytes() != a.to_bytes()
    gens = {g.to_bytes() for g in a.generators} | {a.blinding.to_bytes()}
    assert len(gens) == 9


def test_schnorr_sign_verify_and_domain_separation():
    kp = keygen(b"alice")
    sig = sign(kp.secret, b"msg")
    assert verify_sig(kp.public, b"msg", sig)
    assert verify_sig(kp.public.to_bytes(), b"msg", sig.to_bytes())
    assert not verify_sig(kp.public, b"msg2", sig)
    assert not verify_sig(keygen(b"bob").public, b"msg", sig)
    assert not verify_sig(kp.public, b"msg", sign(kp.secret, b"msg", domain=b"other"))
    assert not verify_sig(kp.public, b"msg", b"\x00" * 10)
    assert not verify_sig(b"\xff" * 32, b"msg", sig)
    assert not verify_sig(GroupElement.identity(), b"msg", sig)
    assert sign(kp.secret, b"msg") == sig


def test_hash_commit_and_tagged_hash():
    a = hash_commit(b"ab", b"c", b"tag")
    assert a != hash_commit(b"a", b"bc", b"tag")
    assert a != hash_commit(b"ab", b"c", b"tag2")
    with pytest.raises(CryptoError):
        hash_commit(b"x", b"", b"")
    assert tagged_hash(b"t", b"ab", b"c") != tagged_hash(b"t", b"a", b"bc")
    assert len(tagged_hash(b"t", b"x", hash_name="blake2s")) == 32
