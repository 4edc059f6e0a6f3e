"""Multipath transport: one reliable TCP connection per channel.

The sender runs one writer thread per channel; the receiver runs one reader
thread per channel, all feeding a single reassembly stage.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
from typing import BinaryIO, Sequence

from .codec import DEFAULT_WINDOW, CodecConfig, decode_frames, encode_stream
from .errors import FrameMismatch, ReassemblyTimeout
from .frame import iter_frames

log = logging.getLogger(__name__)

_EOF = object()


def parse_address(text: str, default_host: str = "127.0.0.1") -> tuple:
    host, sep, port = text.rpartition(":")
    if not sep:
        host, port = default_host, text
    return (host or default_host, int(port))


class _ChannelWriter:
    """File-like sink that hands buffered frames to a sender thread."""

    FLUSH_AT = 1 << 16

    def __init__(self, sock: socket.socket, index: int):
        self.sock = sock
        self.index = index
        self.q: queue.Queue = queue.Queue(maxsize=256)
        self.buf = bytearray()
        self.error: BaseException | None = None
        self.thread = threading.Thread(target=self._run, name=f"cermet-send-{index}", daemon=True)
        self.thread.start()

    def _run(self):
        try:
            while True:
                item = self.q.get()
                if item is _EOF:
                    break
                self.sock.sendall(item)
            self.sock.shutdown(socket.SHUT_WR)
        except BaseException as exc:  # surfaced by close()
            self.error = exc

    def write(self, data: bytes) -> int:
        if self.error is not None:
            raise self.error
        self.buf += data
        if len(self.buf) >= self.FLUSH_AT:
            self.q.put(bytes(self.buf))
            self.buf.clear()
        return len(data)

    def close(self):
        if self.buf:
            self.q.put(bytes(self.buf))
            self.buf.clear()
        self.q.put(_EOF)
        self.thread.join()
        self.sock.close()
        if self.error is not None:
            raise self.error


def send_stream(reader: BinaryIO, cfg: CodecConfig, peers: Sequence[tuple], timeout: float = 30.0) -> int:
    """Encode ``reader`` and send channel i over a connection to ``peers[i]``."""
    if len(peers) != cfg.n:
        raise ValueError(f"need {cfg.n} peer addresses, got {len(peers)}")
    socks = []
    try:
        for peer in peers:
            socks.append(socket.create_connection(tuple(peer), timeout=timeout))
    except BaseException:
        for s in socks:
            s.close()
        raise
    writers = [_ChannelWriter(s, i) for i, s in enumerate(socks)]
    try:
        count = encode_stream(reader, cfg, writers)
    finally:
        errors = []
        for w in writers:
            try:
                w.close()
            except BaseException as exc:
                errors.append(exc)
    if errors:
        raise errors[0]
    log.debug("sent %d batches over %d channels", count, cfg.n)
    return count


class Receiver:
    """Listens on one address per channel and decodes the incoming streams.

    Bind with port 0 to let the OS pick; ``addresses`` reports what was bound.
    """

    def __init__(self, cfg: CodecConfig, listen: Sequence[tuple], timeout: float = 30.0):
        if len(listen) != cfg.n:
            raise ValueError(f"need {cfg.n} listen addresses, got {len(listen)}")
        self.cfg = cfg
        self.timeout = timeout
        self.listeners = []
        try:
            for addr in listen:
                s = socket.create_server(tuple(addr))
                s.settimeout(timeout)
                self.listeners.append(s)
        except BaseException:
            self.close()
            raise
        self._conns: list = []

    @property
    def addresses(self) -> list:
        return [s.getsockname()[:2] for s in self.listeners]

    def _serve(self, listener: socket.socket, q: queue.Queue):
        try:
            conn, _ = listener.accept()
        except socket.timeout:
            q.put(ReassemblyTimeout(f"no connection on {listener.getsockname()[:2]}"))
            return
        except OSError as exc:
            q.put(exc)
            return
        self._conns.append(conn)
        conn.settimeout(None)
        bound = None
        try:
            with conn.makefile("rb") as stream:
                for frame in iter_frames(stream):
                    if bound is None:
                        bound = frame.channel_index
                    elif frame.channel_index != bound:
                        raise FrameMismatch(
                            f"connection for channel {bound} carried a channel {frame.channel_index} frame"
                        )
                    q.put(frame)
            q.put(_EOF)
        except BaseException as exc:
            q.put(exc)

    def _frames(self, q: queue.Queue):
        finished = 0
        while finished < len(self.listeners):
            try:
                item = q.get(timeout=self.timeout)
            except queue.Empty:
                raise ReassemblyTimeout(f"no frame for {self.timeout}s") from None
            if item is _EOF:
                finished += 1
            elif isinstance(item, BaseException):
                raise item
            else:
                yield item

    def run(self, writer: BinaryIO, window: int = DEFAULT_WINDOW) -> int:
        q: queue.Queue = queue.Queue()
        threads = [
            threading.Thread(target=self._serve, args=(s, q), name=f"cermet-recv-{i}", daemon=True)
            for i, s in enumerate(self.listeners)
        ]
        for t in threads:
            t.start()
        try:
            return decode_frames(self._frames(q), self.cfg, writer, window=window)
        finally:
            self.close()

    def close(self):
        for s in self.listeners + self._conns:
            try:
                s.close()
            except OSError:
                pass


def recv_stream(cfg: CodecConfig, listen: Sequence[tuple], writer: BinaryIO, timeout: float = 30.0,
                window: int = DEFAULT_WINDOW) -> int:
    return Receiver(cfg, listen, timeout).run(writer, window)
