"""Pure-Python kernels: the reference the native extension mirrors exactly.

Two entry points, same signatures as gridcast._native:

* ``run_stream_trials``  — Monte-Carlo costs of a search strategy against a
  declared adversary kind.
* ``run_broadcast``      — the full grid broadcast simulation (fingerprint
  wave + staggered data dissemination) over one event timeline.

Everything that consumes randomness does so through the splitmix64 helpers
in gridcast._prng, in a pinned call order, so the two backends produce
bit-identical outputs. When touching anything here, keep the native kernel
in lockstep.

Engine conventions (shared contract):

* node index = y * W + x; iteration is always ascending index;
* fingerprints and payloads are tracked as identities (0 = genuine, 1 =
  forged, >= 2 fresh garbage per emission) — hashing happens at the API
  layer, and the engine assumes no collisions;
* per-node sampling seed = mix(seed, 0xD0, x, y), per-pass stream =
  SplitMix64(mix(node_seed, 0xE0, pass_index));
* a node's fingerprint-listening window is [0, own commit]: it is awake
  that whole window (charged analytically at commit), ingests fingerprint
  records one at a time and stops reading mid-slot once committed;
  data records that arrive before its commit are type-filtered unread;
* data listening happens only at scheduled slots: pass rounds start at
  round 2(x+y) + 10r + 2k + 7, preliminary pass j samples
  ceil(lg^(k-j)(n'/2)) stream positions, pass k runs the single-round
  shape, and every later round is a full member scan (retry) until the
  payload lands;
* committed nodes transmit the payload at every own slot from
  max(wait-gate, commit)+ onwards (bounded by the rebroadcast limit when
  one is set).
"""

from __future__ import annotations

import numpy as np

from ._prng import MASK64, SplitMix64, mix, sample_sorted
from .grid import DataPhaseStall, FingerprintPhaseStall

# status codes (shared with protocol.py)
OK, FAILSTOP, BYZ_SILENT, BYZ_GARBAGE, BYZ_EQUIVOCATE, BYZ_WRONGDATA = range(6)

# fingerprint/payload identities
FP_TRUE, FP_FAKE = 0, 1


# ====================== stream trials ======================


def run_stream_trials(kind, rounds, adv_kind, n, bits, trials, base_seed):
    """Reference path: one python strategy run per trial."""
    from .sources import AdversarySpec
    from .streams import StrategyConfig, run_strategy

    config = StrategyConfig(kind=kind, rounds=rounds)
    spec = AdversarySpec(kind=adv_kind, n=n, bits=bits)
    costs = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        costs[i] = run_strategy(config, spec, (base_seed + i) & MASK64).cost
    return costs


# ====================== broadcast engine ======================


def run_broadcast(params: dict) -> dict:
    from .streams import prelim_budgets, sqrt_budget

    W = int(params["W"])
    H = int(params["H"])
    r = int(params["r"])
    k = int(params["k"])
    theta = int(params["theta"])
    seed = int(params["seed"])
    msg_bits = int(params["msg_bits"])
    fp_bits = int(params["fp_bits"])
    status = np.asarray(params["status"], dtype=np.int8)
    rebroadcasts = int(params.get("rebroadcasts", -1))  # -1 = unlimited
    fp_only = bool(params.get("fp_only", False))
    fp_cap_rounds = int(params.get("fp_cap_rounds", 2 * (W + H) + 10 * r + 64))
    retry_cap = int(params.get("retry_cap", 4 * (W + H) + 64))

    P = 2 * r + 1
    n = P * P
    N = W * H
    if status.shape != (N,):
        raise ValueError("status must have one entry per node")
    dealer = 0  # index of (0, 0)
    if status[dealer] != OK:
        raise ValueError("the dealer must be a correct node")

    commit_bits = 64 + fp_bits
    heard_bits = 96 + fp_bits
    data_bits = 32 + msg_bits

    # ---- static geometry ----
    xs = np.arange(N, dtype=np.int64) % W
    ys = np.arange(N, dtype=np.int64) // W
    slot_of = ((xs % P) * P + (ys % P)).astype(np.int64)
    nodes_by_slot = [[] for _ in range(n)]
    for i in range(N):
        nodes_by_slot[slot_of[i]].append(i)

    neighbors = []  # punctured, ascending index
    for i in range(N):
        x, y = int(xs[i]), int(ys[i])
        nb = [
            yy * W + xx
            for yy in range(max(0, y - r), min(H, y + r + 1))
            for xx in range(max(0, x - r), min(W, x + r + 1))
            if (xx, yy) != (x, y)
        ]
        neighbors.append(nb)
    members = [sorted(nb, key=lambda j: slot_of[j]) for nb in neighbors]
    member_slots = [[int(slot_of[j]) for j in mb] for mb in members]
    stream_len = np.array(
        [len(mb) + (len(mb) & 1) for mb in members], dtype=np.int64
    )

    gate_thresh = 1 + 2 * n * (xs + ys + r)
    pass0_round = 2 * (xs + ys) + 10 * r + 2 * k + 7

    # ---- dynamic state ----
    fp_committed = np.zeros(N, dtype=bool)
    fp_commit_t = np.full(N, -1, dtype=np.int64)
    fmaj = np.full(N, -1, dtype=np.int64)
    data_commit_t = np.full(N, -1, dtype=np.int64)
    payload_of = np.full(N, -1, dtype=np.int64)
    send_start = np.full(N, -1, dtype=np.int64)
    sends_done = np.zeros(N, dtype=np.int64)

    awake = np.zeros(N, dtype=np.int64)
    listened = np.zeros(N, dtype=np.int64)
    fp_listened = np.zeros(N, dtype=np.int64)
    data_listened = np.zeros(N, dtype=np.int64)
    data_msgs = np.zeros(N, dtype=np.int64)
    data_listen_slots = np.zeros(N, dtype=np.int64)
    sent_bits = np.zeros(N, dtype=np.int64)
    sent_msgs = np.zeros(N, dtype=np.int64)
    retries_used = np.zeros(N, dtype=np.int64)
    commit_round_of = np.full(N, -1, dtype=np.int64)  # data commit round

    pending_commit_send = np.zeros(N, dtype=bool)
    heard_q: list[list] = [[] for _ in range(N)]
    seen_from: list[set] = [set() for _ in range(N)]
    evidence: list[dict | None] = [None] * N

    honest_machine = (status == OK) | (status == BYZ_WRONGDATA)
    is_correct = status == OK

    # byzantine helpers
    rng_byz = SplitMix64(mix(seed, 0xBAD))
    garbage_next = 2  # fresh identity per forged-garbage emission
    equiv_targets = []
    equiv_cursor = np.zeros(N, dtype=np.int64)
    for i in range(N):
        if status[i] == BYZ_EQUIVOCATE:
            equiv_targets.append([j for j in neighbors[i] if status[j] == OK])
        else:
            equiv_targets.append(None)
    byz_send_start = np.full(N, -1, dtype=np.int64)
    for i in range(N):
        if status[i] in (BYZ_GARBAGE, BYZ_EQUIVOCATE, BYZ_WRONGDATA):
            g = int(gate_thresh[i])
            byz_send_start[i] = g + ((slot_of[i] - g) % n)

    # dealer starts committed, with the payload, transmitting its commit
    fp_committed[dealer] = True
    fp_commit_t[dealer] = 0
    fmaj[dealer] = FP_TRUE
    data_commit_t[dealer] = 0
    payload_of[dealer] = 0
    awake[dealer] += 1  # its fingerprint window is the single slot t = 0
    pending_commit_send[dealer] = True
    g = int(gate_thresh[dealer])
    send_start[dealer] = g + ((slot_of[dealer] - g) % n)

    remaining_fp = int(np.sum(is_correct & ~fp_committed))
    remaining_data = int(np.sum(is_correct & (data_commit_t < 0)))

    node_seed = [mix(seed, 0xD0, int(xs[i]), int(ys[i])) for i in range(N)]

    def fp_commit(w: int, f: int, t: int) -> None:
        nonlocal remaining_fp
        fp_committed[w] = True
        fp_commit_t[w] = t
        fmaj[w] = f
        awake[w] += t + 1  # listening window [0, t], charged in one go
        pending_commit_send[w] = True
        evidence[w] = None
        if is_correct[w]:
            remaining_fp -= 1

    def data_commit(w: int, pid: int, t: int, round_idx: int) -> None:
        nonlocal remaining_data
        data_commit_t[w] = t
        payload_of[w] = pid
        commit_round_of[w] = round_idx
        g2 = max(int(gate_thresh[w]), t + 1)
        send_start[w] = g2 + ((slot_of[w] - g2) % n)
        remaining_data -= 1

    def ingest_fp(w: int, sender: int, origin: int, f: int, tau: int, t: int) -> None:
        """One COMMIT (origin = -1) or HEARD record, receiver not committed."""
        b = commit_bits if origin < 0 else heard_bits
        listened[w] += b
        fp_listened[w] += b
        if origin < 0:
            if sender not in seen_from[w]:
                seen_from[w].add(sender)
                heard_q[w].append((sender, f, tau))
            if sender == dealer:
                fp_commit(w, f, t)
                return
        if theta == 1:
            far = max(
                abs(int(xs[sender]) - int(xs[origin])),
                abs(int(ys[sender]) - int(ys[origin])),
            ) if origin >= 0 else 0
            if far <= 2 * r:
                fp_commit(w, f, t)
            return
        ev = evidence[w]
        if ev is None:
            ev = evidence[w] = {}
        key = (f, tau)
        senders = ev.setdefault(key, {})
        if sender in senders:
            return
        senders[sender] = origin
        if len(senders) < theta:
            return
        # candidate centers where the new record is valid: within r of both
        sx, sy = int(xs[sender]), int(ys[sender])
        lox, hix, loy, hiy = sx - r, sx + r, sy - r, sy + r
        if origin >= 0:
            ox, oy = int(xs[origin]), int(ys[origin])
            lox, hix = max(lox, ox - r), min(hix, ox + r)
            loy, hiy = max(loy, oy - r), min(hiy, oy + r)
        for qy in range(max(0, loy), min(H, hiy + 1)):
            for qx in range(max(0, lox), min(W, hix + 1)):
                count = 0
                for a, o in senders.items():
                    if max(abs(int(xs[a]) - qx), abs(int(ys[a]) - qy)) > r:
                        continue
                    if o >= 0 and max(abs(int(xs[o]) - qx), abs(int(ys[o]) - qy)) > r:
                        continue
                    count += 1
                if count >= theta:
                    fp_commit(w, f, t)
                    return

    # per-round data listening buckets: wake_step[i] == t means "scheduled now"
    wake_mark = np.full(N, -1, dtype=np.int64)
    bucket: list[list[int]] = [[] for _ in range(n)]

    max_rounds = max(
        int(np.max(pass0_round)) + k + 1 + retry_cap + 8, fp_cap_rounds + 2
    )
    t_end = -1

    for t in range(0, (max_rounds + 1) * n):
        s = t % n
        round_idx = t // n

        if s == 0:
            if remaining_fp > 0 and round_idx > fp_cap_rounds:
                raise FingerprintPhaseStall(
                    f"{remaining_fp} correct nodes uncommitted after "
                    f"{round_idx} rounds"
                )
            for lst in bucket:
                lst.clear()
            if not fp_only:
                for w in range(N):
                    if (
                        status[w] != OK
                        or not fp_committed[w]
                        or data_commit_t[w] >= 0
                        or round_idx < pass0_round[w]
                    ):
                        continue
                    L = len(members[w])
                    sl = int(stream_len[w])
                    pass_idx = round_idx - int(pass0_round[w])
                    if pass_idx > k:
                        retries_used[w] += 1
                        if retries_used[w] > retry_cap:
                            raise DataPhaseStall(
                                f"node {int(xs[w])},{int(ys[w])} out of retries"
                            )
                        positions = range(L)
                    elif pass_idx == k:
                        rng = SplitMix64(mix(node_seed[w], 0xE0, pass_idx))
                        half = sl // 2
                        positions = sample_sorted(rng, sqrt_budget(sl), half)
                        positions += list(range(half, sl))
                    else:
                        budgets = prelim_budgets(sl, k)
                        rng = SplitMix64(mix(node_seed[w], 0xE0, pass_idx))
                        positions = sample_sorted(rng, budgets[pass_idx], sl)
                    mslots = member_slots[w]
                    for pos in positions:
                        if pos < L:  # the padding phantom is never attended
                            bucket[mslots[pos]].append(w)

        for w in bucket[s]:
            if data_commit_t[w] < 0:  # stopped attending once committed
                wake_mark[w] = t
                awake[w] += 1
                data_listen_slots[w] += 1

        for q in nodes_by_slot[s]:
            st = status[q]
            if st == FAILSTOP or st == BYZ_SILENT:
                continue
            batch = []  # (origin, f, tau) fp records; ("D", pid) data records
            if honest_machine[q]:
                if pending_commit_send[q]:
                    pending_commit_send[q] = False
                    batch.append((-1, int(fmaj[q]), 0))
                if heard_q[q]:
                    batch.extend(heard_q[q])
                    heard_q[q].clear()
                if st == OK:
                    if (
                        send_start[q] >= 0
                        and t >= send_start[q]
                        and (rebroadcasts < 0 or sends_done[q] < rebroadcasts)
                    ):
                        sends_done[q] += 1
                        batch.append(("D", int(payload_of[q])))
                elif t >= byz_send_start[q]:  # wrong-data: forged payload
                    batch.append(("D", FP_FAKE))
            elif st == BYZ_GARBAGE:
                if remaining_fp > 0:
                    batch.append((-1, garbage_next, rng_byz.bounded(1 << 20)))
                    garbage_next += 1
                if remaining_fp == 0 and t >= byz_send_start[q]:
                    batch.append(("D", garbage_next))
                    garbage_next += 1
            elif st == BYZ_EQUIVOCATE:
                if remaining_fp > 0:
                    batch.append((-1, FP_FAKE, 0))
                    tgts = equiv_targets[q]
                    if tgts:
                        o = tgts[int(equiv_cursor[q]) % len(tgts)]
                        equiv_cursor[q] += 1
                        batch.append((o, FP_FAKE, 0))
                if remaining_fp == 0 and t >= byz_send_start[q]:
                    batch.append(("D", FP_FAKE))
            if not batch:
                continue
            bits = 0
            for rec in batch:
                if rec[0] == "D":
                    bits += data_bits
                elif rec[0] < 0:
                    bits += commit_bits
                else:
                    bits += heard_bits
            sent_bits[q] += bits
            sent_msgs[q] += len(batch)
            if honest_machine[q] and fp_committed[q] and t > fp_commit_t[q]:
                awake[q] += 1  # transmissions outside the fp window
            for w in neighbors[q]:
                if not honest_machine[w]:
                    continue
                for rec in batch:
                    if rec[0] == "D":
                        if (
                            status[w] == OK
                            and fp_committed[w]
                            and data_commit_t[w] < 0
                            and wake_mark[w] == t
                        ):
                            listened[w] += data_bits
                            data_listened[w] += data_bits
                            data_msgs[w] += 1
                            if rec[1] == fmaj[w]:
                                data_commit(w, rec[1], t, round_idx)
                    elif not fp_committed[w]:
                        ingest_fp(w, q, rec[0], rec[1], rec[2], t)

        if fp_only:
            if remaining_fp == 0:
                t_end = t
                break
        elif remaining_fp == 0 and remaining_data == 0:
            t_end = t
            break

    if t_end < 0:
        raise DataPhaseStall(
            f"{remaining_data} correct nodes without payload at the step cap"
        )

    # data window: rounds from first scheduled pass through the commit round
    data_window = np.zeros(N, dtype=np.int64)
    committed_mask = (data_commit_t >= 0) & is_correct
    for w in np.nonzero(committed_mask)[0]:
        w = int(w)
        if w == dealer:
            continue
        data_window[w] = n * max(1, int(commit_round_of[w]) - int(pass0_round[w]) + 1)

    payload_ok = np.full(N, -1, dtype=np.int8)
    payload_ok[is_correct] = 0
    payload_ok[is_correct & (payload_of == 0) & (data_commit_t >= 0)] = 1
    if fp_only:
        payload_ok[:] = -1

    return {
        "t_init": 0,
        "t_end": int(t_end),
        "slots": n,
        "fp_commit": fp_commit_t,
        "data_commit": data_commit_t,
        "fmaj": fmaj,
        "awake": awake,
        "listened_bits": listened,
        "fp_listened_bits": fp_listened,
        "data_listened_bits": data_listened,
        "data_listened_msgs": data_msgs,
        "data_listen_slots": data_listen_slots,
        "data_window_slots": data_window,
        "sent_bits": sent_bits,
        "sent_msgs": sent_msgs,
        "retries_used": retries_used,
        "pass0_round": pass0_round.astype(np.int64),
        "members_count": np.array([len(m) for m in members], dtype=np.int64),
        "payload_ok": payload_ok,
    }
