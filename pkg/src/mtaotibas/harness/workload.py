"""Workload scripts: JSON-described oracle call sequences.

A workload is a list of operations with symbolic names, e.g.::

    [{"op": "lowerlevel_setup", "ta": "TA-1"},
     {"op": "h0", "id": "alice", "bit": 0},
     {"op": "h1", "id": "alice", "message": "m1", "ta": "TA-1"},
     {"op": "corrupt", "ta": "TA-1"},
     {"op": "extract", "id": "alice", "ta": "TA-1"},
     {"op": "sign", "id": "alice", "message": "m1", "ta": "TA-1"}]

Names are encoded as UTF-8 bytes. An ``h1`` op requires its authority to
have been set up earlier in the script (the oracle enforces that
ordering); corrupt/extract/sign set authorities up internally, matching
the game's bookkeeping, where only the adversary's own queries count.
"""

from typing import List, Optional

from ..errors import ReductionAbort, UnknownCertificate
from .challenger import Challenger


def run_workload(ch: Challenger, ops: List[dict]) -> dict:
    """Execute a script against a challenger. Stops at the first abort.

    Returns a summary: executed op count, abort site (if any), and the
    challenger's query counters.
    """
    executed = 0
    abort_site: Optional[str] = None
    abort_detail = ""
    for op in ops:
        kind = op.get("op")
        try:
            if kind == "h0":
                ch.oracle_h0(op["id"].encode(), int(op.get("bit", 0)))
            elif kind == "h1":
                ta = ch.ta_list.get(op["ta"].encode())
                if ta is None:
                    raise UnknownCertificate(
                        f"workload queried h1 for authority {op['ta']!r} before setting it up"
                    )
                ch.oracle_h1(op["id"].encode(), op["message"].encode(),
                             ta.record.cert_bytes(ch.engine))
            elif kind == "lowerlevel_setup":
                ch.oracle_lowerlevel_setup(op["ta"].encode())
            elif kind == "corrupt":
                ch.oracle_corrupt(op["ta"].encode())
            elif kind == "extract":
                ch.oracle_extract(op["id"].encode(), op["ta"].encode())
            elif kind == "sign":
                ch.oracle_sign(op["id"].encode(), op["message"].encode(), op["ta"].encode())
            else:
                raise ValueError(f"unknown workload op {kind!r}")
        except ReductionAbort as abort:
            abort_site = abort.site
            abort_detail = abort.detail
            break
        executed += 1
    return {
        "executed": executed,
        "total": len(ops),
        "aborted": abort_site is not None,
        "abort_site": abort_site,
        "abort_detail": abort_detail,
        "counts": dict(ch.counts),
    }


def abort_workload(q_c: int, q_e: int, q_s: int) -> List[dict]:
    """The standard abort-probability workload: the requested numbers of
    corrupt, extract and sign queries, each on fresh names so every query
    flips fresh coins."""
    ops = []
    for i in range(q_c):
        ops.append({"op": "corrupt", "ta": f"wl-ta-c{i}"})
    for i in range(q_e):
        ops.append({"op": "extract", "id": f"wl-id-e{i}", "ta": f"wl-ta-e{i}"})
    for i in range(q_s):
        ops.append({"op": "sign", "id": f"wl-id-s{i}", "message": f"wl-m{i}", "ta": f"wl-ta-s{i}"})
    return ops
