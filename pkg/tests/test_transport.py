import socket
import struct
import threading
import tracemalloc

import pytest

from psc.broadcast.signatures import SigningKey
from psc.elgamal import encrypt
from psc.protocol.session import free_ports
from psc.transport.base import exchange
from psc.transport.frames import (MAX_FRAME, Frame, FrameError, FrameTooLarge, MsgType, check_length, decode_frame,
                                  encode_frame)
from psc.transport.simnet import DROP, DUPLICATE, REPLACE, Fault, SimNet
from psc.transport.sockets import (AuthFailed, Channel, ConnectFailed, PeerInfo, SocketTransport, _recv_record,
                                   handshake_initiator, handshake_responder)

from .helpers import SESSION, make_keys

IDS = ("A", "B", "C")


def frame(sender, payload=b"x", phase=1, rnd=0):
    return Frame(MsgType.DIRECT, SESSION, phase, rnd, sender, payload)


# -- frames --------------------------------------------------------------------------------

def test_frame_roundtrip():
    f = Frame(MsgType.DS_DIGEST, SESSION, 3, 7, "CP1", bytes(32), (("CP1", bytes(64)), ("CP2", b"\x01" * 64)))
    assert decode_frame(encode_frame(f)) == f
    assert f.encode() == encode_frame(f)


def test_frame_errors():
    data = encode_frame(frame("A"))
    with pytest.raises(FrameError):
        decode_frame(data[:-1])
    with pytest.raises(FrameError):
        decode_frame(data + b"\x00")
    with pytest.raises(FrameError):
        decode_frame(b"\x00\x00")
    bad_kind = data[:4] + b"\xee" + data[5:]
    with pytest.raises(FrameError):
        decode_frame(bad_kind)


def test_check_length():
    assert check_length(struct.pack(">I", MAX_FRAME)) == MAX_FRAME
    with pytest.raises(FrameTooLarge):
        check_length(struct.pack(">I", MAX_FRAME + 1))


# -- SimNet ---------------------------------------------------------------------------------

def chatter(me, rounds=3):
    got = []
    for r in range(rounds):
        out = {p: [frame(me, f"{me}{r}".encode(), rnd=r)] for p in IDS if p != me}
        incoming = yield from exchange([p for p in IDS if p != me], out)
        got.append({p: [f.payload for f in fs] for p, fs in incoming.items()})
    return got


def test_simnet_delivers_in_lockstep():
    res = SimNet().run({p: chatter(p) for p in IDS})
    assert res["A"][1] == {"B": [b"B1"], "C": [b"C1"]}
    assert res["C"][2] == {"A": [b"A2"], "B": [b"B2"]}


def test_simnet_deterministic():
    digests = set()
    for _ in range(3):
        net = SimNet(seed=4)
        net.run({p: chatter(p) for p in IDS})
        digests.add(net.transcript_digest())
    assert len(digests) == 1


def test_simnet_drop_fault():
    res = SimNet([Fault("A", DROP, step=1, targets=("B",))]).run({p: chatter(p) for p in IDS})
    assert res["B"][1]["A"] == []
    assert res["C"][1]["A"] == [b"A1"]
    assert res["B"][0]["A"] == [b"A0"] and res["B"][2]["A"] == [b"A2"]


def test_simnet_duplicate_and_replace():
    res = SimNet([Fault("A", DUPLICATE, step=0), Fault("B", REPLACE, step=0, payload=b"evil")]).run(
        {p: chatter(p) for p in IDS})
    assert res["C"][0]["A"] == [b"A0", b"A0"]
    assert res["C"][0]["B"] == [b"evil"]


def test_simnet_phase_filter():
    res = SimNet([Fault("A", DROP, phase=2)]).run({p: chatter(p) for p in IDS})
    assert res["B"][0]["A"] == [b"A0"]


def test_simnet_finished_party_is_silent():
    def quitter():
        yield from exchange(["B", "C"], {})
        return "done"

    res = SimNet().run({"A": quitter(), "B": chatter("B"), "C": chatter("C")})
    assert res["A"] == "done"
    assert res["B"][2]["A"] == []


# -- sockets ----------------------------------------------------------------------------------

def test_oversized_record_rejected_before_allocation():
    a, b = socket.socketpair()
    try:
        a.sendall(struct.pack(">I", 65 * 1024 * 1024))
        tracemalloc.start()
        with pytest.raises(FrameTooLarge):
            _recv_record(b)
        peak = tracemalloc.get_traced_memory()[1]
        tracemalloc.stop()
        assert peak < 1024 * 1024
    finally:
        a.close()
        b.close()


def handshake_pair(G, resp_roster_key=None, init_view_key=None):
    keys = make_keys(G, ("A", "B"))
    a_info = PeerInfo("A", "cp", "127.0.0.1", 0, resp_roster_key or keys["A"].public)
    b_info = PeerInfo("B", "cp", "127.0.0.1", 0, init_view_key or keys["B"].public)
    s1, s2 = socket.socketpair()
    s1.settimeout(5)
    s2.settimeout(5)
    out = {}

    def responder():
        try:
            out["resp"] = handshake_responder(s2, G, SESSION, "B", keys["B"], {"A": a_info})
        except Exception as exc:
            out["resp"] = exc
            s2.close()

    th = threading.Thread(target=responder)
    th.start()
    try:
        out["init"] = handshake_initiator(s1, G, SESSION, "A", keys["A"], b_info)
    except Exception as exc:
        out["init"] = exc
        s1.close()
    th.join()
    return out, (s1, s2)


def test_handshake_derives_matching_keys(G):
    out, socks = handshake_pair(G)
    k_send, k_recv = out["init"]
    peer, r_send, r_recv = out["resp"]
    assert peer.id == "A" and (k_send, k_recv) == (r_recv, r_send) and k_send != k_recv
    for s in socks:
        s.close()


def test_handshake_wrong_key_auth_failed(G, rng):
    stranger = SigningKey.generate(G, rng).public
    out, socks = handshake_pair(G, init_view_key=stranger)
    assert isinstance(out["init"], AuthFailed)
    out, socks = handshake_pair(G, resp_roster_key=stranger)
    assert isinstance(out["resp"], AuthFailed)


def test_channel_ciphertext_frame_roundtrip(G, rng):
    out, (s1, s2) = handshake_pair(G)
    k_send, k_recv = out["init"]
    _, r_send, r_recv = out["resp"]
    for s in (s1, s2):
        s.settimeout(None)
    a = Channel(s1, "A", "B", SESSION, k_send, k_recv)
    b = Channel(s2, "B", "A", SESSION, r_send, r_recv)
    ct = encrypt(G, G.base_exp(3), 1, 2).encode(G)
    assert len(ct) == 64
    a.send_step(0, [frame("A", ct)])
    assert [f.payload for f in b.recv_step(0, 5)] == [ct]
    b.send_step(0, [])
    assert a.recv_step(0, 5) == []
    a.shutdown()
    b.shutdown()


def loopback(G, keys, roster_keys, ids=("A", "B"), connect_timeout=3.0):
    ports = free_ports(len(ids))
    roster = {p: PeerInfo(p, "cp", "127.0.0.1", port, roster_keys[p]) for p, port in zip(ids, ports)}
    ts = {p: SocketTransport(G, SESSION, p, keys[p], roster, 5.0, connect_timeout) for p in ids}
    for t in ts.values():
        t.listen()
    results = {}

    def echo(me):
        peers = [p for p in ids if p != me]
        incoming = yield from exchange(peers, {p: [frame(me, b"hi " + me.encode())] for p in peers})
        return {p: [f.payload for f in fs] for p, fs in incoming.items()}

    def work(p):
        try:
            ts[p].connect()
            results[p] = ts[p].run(echo(p))
        except Exception as exc:
            results[p] = exc
            ts[p].close()

    threads = [threading.Thread(target=work, args=(p,)) for p in ids]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    return results


def test_socket_transport_exchange(G):
    keys = make_keys(G, IDS)
    res = loopback(G, keys, {p: k.public for p, k in keys.items()}, IDS)
    assert res["A"] == {"B": [b"hi B"], "C": [b"hi C"]}
    assert res["C"] == {"A": [b"hi A"], "B": [b"hi B"]}


def test_socket_transport_rejects_impostor(G, rng):
    keys = make_keys(G, ("A", "B"))
    roster_keys = {"A": SigningKey.generate(G, rng).public, "B": keys["B"].public}
    res = loopback(G, keys, roster_keys, connect_timeout=1.5)
    assert isinstance(res["B"], AuthFailed)
    # the impostor's link is torn down, so it never hears from B
    assert res["A"] == {"B": []}


def test_connect_failed_without_peer(G):
    keys = make_keys(G, ("A", "B"))
    port = free_ports(1)[0]
    roster = {"A": PeerInfo("A", "cp", "127.0.0.1", free_ports(1)[0], keys["A"].public),
              "B": PeerInfo("B", "cp", "127.0.0.1", port, keys["B"].public)}
    t = SocketTransport(G, SESSION, "A", keys["A"], roster, 1.0, 0.5)
    try:
        with pytest.raises(ConnectFailed):
            t.connect()
    finally:
        t.close()
