"""Channel transports for the checker protocol.

Two transports share the frame codec from :mod:`hydra.proto`:

* in-process channels, registered in a :class:`ChannelHub` under opaque
  string keys (the same string form used by ``resume.chan``); and
* UNIX domain sockets for the standalone ``minichecker --listen`` mode.

A channel is owned by one reader and one writer at a time. The hub keeps a
single global arrival log so a consumer can drain frames from all channels
in deterministic emission order.
"""

from __future__ import annotations

import socket
from collections import deque
from typing import Optional

from . import proto


class ChannelClosed(Exception):
    pass


class InProcChannel:
    """A named, ordered, in-process message channel."""

    def __init__(self, hub: "ChannelHub", name: str) -> None:
        self.hub = hub
        self.name = name
        self.closed = False

    def send(self, msg: proto.Msg) -> None:
        if self.closed:
            raise ChannelClosed(self.name)
        # Round-trip through the codec so in-process and socket transports
        # exercise identical wire semantics.
        frame = proto.encode_frame(msg)
        decoded, _ = proto.decode_frame(frame)
        self.hub._log.append((self.name, decoded))

    def close(self) -> None:
        self.closed = True


class ChannelHub:
    """Registry of in-process channels plus a global arrival log."""

    def __init__(self) -> None:
        self._channels: dict[str, InProcChannel] = {}
        self._log: deque[tuple[str, proto.Msg]] = deque()

    def open(self, name: str) -> InProcChannel:
        if name in self._channels and not self._channels[name].closed:
            raise ValueError(f"channel {name!r} already open")
        chan = InProcChannel(self, name)
        self._channels[name] = chan
        return chan

    def get(self, name: str) -> Optional[InProcChannel]:
        return self._channels.get(name)

    def drain(self) -> list[tuple[str, proto.Msg]]:
        """Pop all pending (channel name, message) pairs in arrival order."""
        out = list(self._log)
        self._log.clear()
        return out


def send_frame(sock: socket.socket, msg: proto.Msg) -> None:
    sock.sendall(proto.encode_frame(msg))


class SocketFrames:
    """Blocking frame iterator over a connected socket."""

    def __init__(self, sock: socket.socket) -> None:
        self.sock = sock
        self._reader = proto.FrameReader()
        self._ready: deque[proto.Msg] = deque()

    def recv(self) -> Optional[proto.Msg]:
        """Read one message; None on orderly EOF."""
        while not self._ready:
            data = self.sock.recv(65536)
            if not data:
                if self._reader.pending:
                    raise proto.ProtocolError("connection closed mid-frame")
                return None
            self._ready.extend(self._reader.feed(data))
        return self._ready.popleft()
