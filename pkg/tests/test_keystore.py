import struct
import threading
import zlib

import pytest

from mtaotibas import keystore, scheme
from mtaotibas.errors import (
    CorruptJournal,
    DuplicateKey,
    KeyAlreadyUsed,
    KeyNotFound,
    StoreLocked,
)
from mtaotibas.keystore import STATUS_FRESH, STATUS_USED, KeyStore


@pytest.fixture
def setup(fixed_scenario, tmp_path):
    eng = fixed_scenario["engine"]
    _, trec = fixed_scenario["tas"][b"TA-1"]
    key = fixed_scenario["keys"][b"ID-A"]
    return eng, trec, key, tmp_path / "keys.journal"


def test_store_and_sign_once(setup):
    eng, trec, key, path = setup
    with KeyStore(path, eng) as store:
        entry_id = store.store_key(key)
        assert store.get(entry_id).status == STATUS_FRESH
        sig = store.sign_once(entry_id, trec, b"message-1")
        assert sig == scheme.sign(eng, key, trec, b"message-1")
        entry = store.get(entry_id)
        assert entry.status == STATUS_USED
        assert entry.message_digest is not None


def test_second_use_rejected(setup):
    eng, trec, key, path = setup
    with KeyStore(path, eng) as store:
        entry_id = store.store_key(key)
        store.sign_once(entry_id, trec, b"message-1")
        with pytest.raises(KeyAlreadyUsed):
            store.sign_once(entry_id, trec, b"another")


def test_unknown_entry(setup):
    eng, trec, _, path = setup
    with KeyStore(path, eng) as store:
        with pytest.raises(KeyNotFound):
            store.sign_once(123, trec, b"m")
        with pytest.raises(KeyNotFound):
            store.get(123)


def test_duplicate_fresh_key_rejected(setup):
    eng, _, key, path = setup
    with KeyStore(path, eng) as store:
        store.store_key(key)
        with pytest.raises(DuplicateKey):
            store.store_key(key)


def test_rotation_after_use_allowed(setup):
    eng, trec, key, path = setup
    with KeyStore(path, eng) as store:
        first = store.store_key(key)
        store.sign_once(first, trec, b"message-1")
        second = store.store_key(key)  # re-extraction models the key update
        assert second != first
        assert store.get(second).status == STATUS_FRESH


def test_reload_preserves_state(setup):
    eng, trec, key, path = setup
    with KeyStore(path, eng) as store:
        a = store.store_key(key)
        store.sign_once(a, trec, b"message-1")
    with KeyStore(path, eng) as store:
        entry = store.get(a)
        assert entry.status == STATUS_USED
        assert entry.key == key
        with pytest.raises(KeyAlreadyUsed):
            store.sign_once(a, trec, b"again")


def test_replay_idempotent(setup):
    eng, trec, key, path = setup
    with KeyStore(path, eng) as store:
        a = store.store_key(key)
        store.sign_once(a, trec, b"message-1")
    with KeyStore(path, eng) as one:
        state_one = one.entries()
    with KeyStore(path, eng) as two:
        state_two = two.entries()
    assert state_one.keys() == state_two.keys()
    for k in state_one:
        assert state_one[k].status == state_two[k].status
        assert state_one[k].message_digest == state_two[k].message_digest


def test_crash_after_persist_leaves_used_state(setup):
    eng, trec, key, path = setup

    class Boom(RuntimeError):
        pass

    with KeyStore(path, eng) as store:
        entry_id = store.store_key(key)
        store.after_persist_hook = lambda: (_ for _ in ()).throw(Boom())
        with pytest.raises(Boom):
            store.sign_once(entry_id, trec, b"message-1")
    # the use record hit the disk before the crash: no second signature
    with KeyStore(path, eng) as store:
        entry = store.get(entry_id)
        assert entry.status == STATUS_USED
        assert entry.message_digest is not None  # audit digest recorded
        with pytest.raises(KeyAlreadyUsed):
            store.sign_once(entry_id, trec, b"message-1")


def test_truncated_final_record_dropped(setup):
    eng, trec, key, path = setup
    with KeyStore(path, eng) as store:
        a = store.store_key(key)
        size_before_use = path.stat().st_size
        store.sign_once(a, trec, b"message-1")
    # chop the tail of the use record: state must equal the pre-use state
    data = path.read_bytes()
    path.write_bytes(data[: size_before_use + 7])
    with pytest.warns(UserWarning):
        with KeyStore(path, eng) as store:
            assert store.get(a).status == STATUS_FRESH


def test_flipped_byte_mid_journal_raises(setup):
    eng, trec, key, path = setup
    with KeyStore(path, eng) as store:
        a = store.store_key(key)
        store.sign_once(a, trec, b"message-1")
    data = bytearray(path.read_bytes())
    data[len(keystore.JOURNAL_MAGIC) + 6] ^= 0x40  # inside the first record's payload
    path.write_bytes(bytes(data))
    with pytest.raises(CorruptJournal):
        KeyStore(path, eng)


def test_corrupt_trailing_record_dropped_with_warning(setup):
    eng, trec, key, path = setup
    with KeyStore(path, eng) as store:
        a = store.store_key(key)
    data = bytearray(path.read_bytes())
    data[-5] ^= 0x01  # payload byte of the final (add) record
    path.write_bytes(bytes(data))
    with pytest.warns(UserWarning):
        with KeyStore(path, eng) as store:
            with pytest.raises(KeyNotFound):
                store.get(a)


def test_unknown_record_op_is_corrupt(setup):
    eng, _, _, path = setup
    KeyStore(path, eng).close()
    payload = b'{"op":"explode"}'
    frame = struct.pack(">I", len(payload)) + payload + struct.pack(">I", zlib.crc32(payload))
    with open(path, "ab") as fh:
        fh.write(frame + frame)  # two records so neither is trailing-droppable
    with pytest.raises(CorruptJournal):
        KeyStore(path, eng)


def test_file_lock_excludes_second_writer(setup):
    eng, _, _, path = setup
    with KeyStore(path, eng):
        with pytest.raises(StoreLocked):
            KeyStore(path, eng)


def test_concurrent_contenders_single_winner(setup):
    eng, trec, key, path = setup
    contenders = 32
    with KeyStore(path, eng) as store:
        entry_id = store.store_key(key)
        outcomes = []
        barrier = threading.Barrier(contenders)

        def attempt():
            barrier.wait()
            try:
                store.sign_once(entry_id, trec, b"message-1")
                outcomes.append("win")
            except KeyAlreadyUsed:
                outcomes.append("lose")

        threads = [threading.Thread(target=attempt) for _ in range(contenders)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    assert outcomes.count("win") == 1
    assert len(outcomes) == contenders


def test_store_path_from_env(monkeypatch):
    assert keystore.store_path_from_env("explicit.journal") == "explicit.journal"
    monkeypatch.setenv(keystore.STORE_ENV, "from-env.journal")
    assert keystore.store_path_from_env(None) == "from-env.journal"
    monkeypatch.delenv(keystore.STORE_ENV)
    assert keystore.store_path_from_env(None) == "mtaotibas-store.journal"
