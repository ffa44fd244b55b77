"""TCP transport with authenticated, encrypted links.

Each pair of parties that talk shares one connection; the party whose id
sorts first dials.  A link starts with a three-message handshake: ephemeral
X25519 keys in the clear, then each side signs the transcript with its
long-term roster key.  Session keys come from HKDF over the shared secret
and the transcript; frames travel sealed with ChaCha20-Poly1305 under a
counter nonce per direction.

A party's exchange steps map onto the link as "frames of the step, then an
END frame carrying the step number".  A peer that has not sent END before
the deadline, or whose connection is gone, counts as silent for that step;
anything it sends for that step afterwards is discarded.
"""

from __future__ import annotations

import hashlib
import logging
import socket
import struct
import threading
import time
from dataclasses import dataclass
from typing import Mapping

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ..broadcast.signatures import SigningKey, sign_message, verify_message
from ..codec import Reader, Writer
from ..group import DecodeError, Group
from ..phases import Phase
from .base import Exchange
from .frames import MAX_FRAME, Frame, FrameError, FrameTooLarge, MsgType, decode_body

log = logging.getLogger(__name__)

DEFAULT_DEADLINE = 10.0
CONNECT_TIMEOUT = 10.0
HANDSHAKE_TAG = b"PSC-HANDSHAKE-v1"
SUITE = "x25519-hkdf-sha256-chacha20poly1305-v1"
TAG_BYTES = 16
MAX_RECORD = MAX_FRAME + TAG_BYTES


class ConnectFailed(ConnectionError):
    pass


class Deadline(TimeoutError):
    pass


class AuthFailed(ConnectionError):
    pass


@dataclass(frozen=True)
class PeerInfo:
    id: str
    role: str  # "cp" or "dp"
    host: str
    port: int
    public: object  # long-term verification key


def talks_to(me: PeerInfo, other: PeerInfo) -> bool:
    """CPs talk to everyone; DPs only to CPs."""
    return me.id != other.id and (me.role == "cp" or other.role == "cp")


# -- raw framing ----------------------------------------------------------------

def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("connection closed")
        buf += chunk
    return bytes(buf)


def _send_record(sock: socket.socket, data: bytes) -> None:
    if len(data) > MAX_RECORD:
        raise FrameTooLarge(f"record of {len(data)} bytes")
    sock.sendall(struct.pack(">I", len(data)) + data)


def _recv_record(sock: socket.socket) -> bytes:
    (n,) = struct.unpack(">I", _recv_exact(sock, 4))
    if n > MAX_RECORD:
        raise FrameTooLarge(f"announced record of {n} bytes exceeds {MAX_RECORD}")
    return _recv_exact(sock, n)


# -- handshake ------------------------------------------------------------------

def _x25519_bytes(pub: X25519PublicKey) -> bytes:
    return pub.public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)


def _hs_frame(session: bytes, sender: str, payload: bytes) -> bytes:
    return Frame(MsgType.HANDSHAKE, session, int(Phase.HANDSHAKE), 0, sender, payload).encode()[4:]


def _hs_read(sock: socket.socket, session: bytes) -> Frame:
    f = decode_body(_recv_record(sock))
    if f.kind != MsgType.HANDSHAKE or f.session != session:
        raise AuthFailed("unexpected handshake frame")
    return f


def _derive(shared: bytes, session: bytes, transcript: bytes) -> tuple:
    okm = HKDF(hashes.SHA256(), 64, salt=session, info=HANDSHAKE_TAG + transcript).derive(shared)
    return okm[:32], okm[32:]


def _transcript(*parts: bytes) -> bytes:
    h = hashlib.sha256(HANDSHAKE_TAG)
    for p in parts:
        h.update(len(p).to_bytes(4, "big") + p)
    return h.digest()


def handshake_initiator(sock, group: Group, session: bytes, me: str, key: SigningKey, peer: PeerInfo):
    eph = X25519PrivateKey.generate()
    m1 = _hs_frame(session, me, Writer().text(peer.id).raw(_x25519_bytes(eph.public_key())).getvalue())
    _send_record(sock, m1)
    f2 = _hs_read(sock, session)
    if f2.sender != peer.id:
        raise AuthFailed(f"expected {peer.id}, got {f2.sender}")
    try:
        r = Reader(f2.payload)
        x_r, sig_r = r.raw(32), r.raw(64)
        r.done()
    except DecodeError as exc:
        raise AuthFailed("malformed handshake") from exc
    t2 = _transcript(m1, x_r, peer.id.encode())
    if not verify_message(group, peer.public, t2, sig_r):
        raise AuthFailed(f"{peer.id} failed to authenticate")
    t3 = _transcript(t2, me.encode())
    _send_record(sock, _hs_frame(session, me, sign_message(group, key, t3)))
    k_send, k_recv = _derive(eph.exchange(X25519PublicKey.from_public_bytes(x_r)), session, t3)
    return k_send, k_recv


def handshake_responder(sock, group: Group, session: bytes, me: str, key: SigningKey, roster: Mapping):
    raw1 = _recv_record(sock)
    f1 = decode_body(raw1)
    if f1.kind != MsgType.HANDSHAKE or f1.session != session:
        raise AuthFailed("unexpected handshake frame")
    peer = roster.get(f1.sender)
    try:
        r = Reader(f1.payload)
        target, x_i = r.text(), r.raw(32)
        r.done()
    except DecodeError as exc:
        raise AuthFailed("malformed handshake") from exc
    if peer is None or target != me:
        raise AuthFailed(f"unexpected peer {f1.sender!r}")
    eph = X25519PrivateKey.generate()
    x_r = _x25519_bytes(eph.public_key())
    t2 = _transcript(raw1, x_r, me.encode())
    _send_record(sock, _hs_frame(session, me, x_r + sign_message(group, key, t2)))
    f3 = _hs_read(sock, session)
    t3 = _transcript(t2, peer.id.encode())
    if f3.sender != peer.id or not verify_message(group, peer.public, t3, f3.payload):
        raise AuthFailed(f"{peer.id} failed to authenticate")
    k_i2r, k_r2i = _derive(eph.exchange(X25519PublicKey.from_public_bytes(x_i)), session, t3)
    return peer, k_r2i, k_i2r


# -- links ----------------------------------------------------------------------------

class Channel:
    """One authenticated, encrypted connection to a peer."""

    def __init__(self, sock: socket.socket, me: str, peer: str, session: bytes, k_send: bytes, k_recv: bytes):
        self.sock = sock
        self.me = me
        self.peer = peer
        self.session = session
        self._tx = ChaCha20Poly1305(k_send)
        self._rx = ChaCha20Poly1305(k_recv)
        self._tx_n = 0
        self._rx_n = 0
        self._lock = threading.Lock()
        self._cond = threading.Condition()
        self._current: list = []
        self._batches: dict = {}
        self._floor = 0  # steps below this were given up on
        self.closed = False
        self.bytes_sent = 0
        self._thread = threading.Thread(target=self._reader, name=f"{me}<-{peer}", daemon=True)
        self._thread.start()

    def send_step(self, step: int, frames) -> None:
        end = Frame(MsgType.END, self.session, 0, step, self.me)
        try:
            with self._lock:
                for f in list(frames) + [end]:
                    data = f.encode()[4:]
                    sealed = self._tx.encrypt(self._tx_n.to_bytes(12, "big"), data, None)
                    self._tx_n += 1
                    _send_record(self.sock, sealed)
                    self.bytes_sent += len(sealed)
        except OSError:
            self._close()

    def recv_step(self, step: int, timeout: float) -> list:
        """Frames of ``step``.  Raises :class:`Deadline` if the peer has not
        finished the step in time; the step is then closed for good."""
        with self._cond:
            self._cond.wait_for(lambda: step in self._batches or self.closed, timeout=max(0.0, timeout))
            frames = self._batches.pop(step, None)
            self._floor = step + 1
            for k in [k for k in self._batches if k < self._floor]:
                del self._batches[k]
        if frames is None:
            raise Deadline(f"{self.peer} silent at step {step}")
        return frames

    def _reader(self) -> None:
        try:
            while True:
                sealed = _recv_record(self.sock)
                try:
                    body = self._rx.decrypt(self._rx_n.to_bytes(12, "big"), sealed, None)
                except InvalidTag:
                    log.warning("%s: dropping link to %s after a forged record", self.me, self.peer)
                    break
                self._rx_n += 1
                try:
                    f = decode_body(body)
                except FrameError:
                    log.warning("%s: malformed frame from %s", self.me, self.peer)
                    continue
                with self._cond:
                    if f.kind == MsgType.END:
                        if f.round >= self._floor:
                            self._batches[f.round] = self._current
                        self._current = []
                        self._cond.notify_all()
                    else:
                        self._current.append(f)
        except (OSError, ConnectionError, FrameTooLarge):
            pass
        self._close()
        try:
            self.sock.close()
        except OSError:
            pass

    def _close(self) -> None:
        with self._cond:
            self.closed = True
            self._cond.notify_all()

    def shutdown(self) -> None:
        """Half-close: our last frames still arrive and the reader keeps
        draining until the peer hangs up too."""
        try:
            self.sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass


# -- transport ----------------------------------------------------------------------------

class SocketTransport:
    """Drives one party generator over TCP links to its peers."""

    def __init__(self, group: Group, session: bytes, me: str, key: SigningKey, roster: Mapping[str, PeerInfo],
                 deadline: float = DEFAULT_DEADLINE, connect_timeout: float = CONNECT_TIMEOUT) -> None:
        self.group = group
        self.session = session
        self.me = me
        self.key = key
        self.roster = dict(roster)
        self.deadline = deadline
        self.connect_timeout = connect_timeout
        self.links: dict[str, Channel] = {}
        self._listener: socket.socket | None = None

    @property
    def peers(self) -> list:
        me = self.roster[self.me]
        return sorted(p for p, info in self.roster.items() if talks_to(me, info))

    def listen(self) -> None:
        info = self.roster[self.me]
        s = socket.create_server((info.host, info.port), reuse_port=False)
        s.settimeout(0.2)
        self._listener = s

    def connect(self) -> None:
        """Dial higher ids, accept lower ones; raises ConnectFailed or AuthFailed."""
        if self._listener is None:
            self.listen()
        until = time.monotonic() + self.connect_timeout
        dial = [p for p in self.peers if self.me < p]
        expect = {p for p in self.peers if p < self.me}
        errors: dict = {}
        accept_thread = threading.Thread(target=self._accept_loop, args=(expect, until, errors), daemon=True)
        accept_thread.start()
        for p in dial:
            self._dial(self.roster[p], until)
        accept_thread.join()
        if errors:
            raise next(iter(errors.values()))
        missing = expect - set(self.links)
        if missing:
            raise ConnectFailed(f"{self.me}: no connection from {sorted(missing)}")
        log.info("%s: connected to %d peers", self.me, len(self.links))

    def _dial(self, peer: PeerInfo, until: float) -> None:
        last = None
        while time.monotonic() < until:
            try:
                sock = socket.create_connection((peer.host, peer.port), timeout=max(0.1, until - time.monotonic()))
            except OSError as exc:
                last = exc
                time.sleep(0.05)
                continue
            sock.settimeout(self.connect_timeout)
            k_send, k_recv = handshake_initiator(sock, self.group, self.session, self.me, self.key, peer)
            sock.settimeout(None)
            self.links[peer.id] = Channel(sock, self.me, peer.id, self.session, k_send, k_recv)
            return
        raise ConnectFailed(f"{self.me}: cannot reach {peer.id} at {peer.host}:{peer.port}: {last}")

    def _accept_loop(self, expect: set, until: float, errors: dict) -> None:
        pending = set(expect)
        while pending and time.monotonic() < until:
            try:
                sock, _ = self._listener.accept()
            except socket.timeout:
                continue
            sock.settimeout(self.connect_timeout)
            roster = {p: self.roster[p] for p in pending}
            try:
                peer, k_send, k_recv = handshake_responder(sock, self.group, self.session, self.me, self.key, roster)
            except (AuthFailed, ConnectionError, FrameError, FrameTooLarge, OSError) as exc:
                log.warning("%s: rejected connection: %s", self.me, exc)
                sock.close()
                if isinstance(exc, AuthFailed):
                    errors.setdefault("auth", exc)
                continue
            sock.settimeout(None)
            self.links[peer.id] = Channel(sock, self.me, peer.id, self.session, k_send, k_recv)
            pending.discard(peer.id)

    def run(self, party):
        """Run a party generator to completion and return its result."""
        steps: dict[str, int] = {}
        try:
            ex = party.send(None)
            while True:
                if not isinstance(ex, Exchange):
                    raise TypeError(f"party yielded {type(ex).__name__}, expected Exchange")
                for p in ex.peers:
                    link = self.links.get(p)
                    if link is not None:
                        link.send_step(steps.get(p, 0), ex.outgoing.get(p, []))
                until = time.monotonic() + (ex.timeout if ex.timeout is not None else self.deadline)
                incoming = {}
                for p in ex.peers:
                    k = steps.get(p, 0)
                    link = self.links.get(p)
                    try:
                        incoming[p] = link.recv_step(k, until - time.monotonic()) if link is not None else []
                    except Deadline as exc:
                        log.info("%s: %s", self.me, exc)
                        incoming[p] = []
                    steps[p] = k + 1
                ex = party.send(incoming)
        except StopIteration as stop:
            return stop.value
        finally:
            self.close()

    def close(self) -> None:
        for link in self.links.values():
            link.shutdown()
        self.links = {}
        if self._listener is not None:
            self._listener.close()
            self._listener = None
