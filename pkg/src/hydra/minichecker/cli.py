"""Standalone minichecker executable.

``minichecker --batch FILE`` prints the whole-program check result as one
JSON line.

``minichecker --listen PATH`` serves the checker protocol over UNIX domain
sockets. Each connection to PATH becomes a fresh active session. Checkpoint
announcements are relayed on the parent session's connection; each snapshot
additionally listens at ``PATH.<id>`` for ``resume`` frames. A resume frame
names a callback endpoint: the new active session connects to it and speaks
there. See docs/protocol.md.
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import sys
import threading
from typing import Optional

from .. import proto
from ..channels import SocketFrames, send_frame
from .batch import batch_check
from .session import DEFAULT_INTERVAL, CheckerHost

logger = logging.getLogger(__name__)


class _Server:
    def __init__(self, path: str, interval: int, prologue: bool) -> None:
        self.path = path
        self.host = CheckerHost(interval=interval, prologue_checkpoint=prologue)
        self.lock = threading.Lock()
        self.conns: dict[int, socket.socket] = {}
        self.stop = threading.Event()

    def _route(self, events: list[tuple[int, proto.Msg]]) -> None:
        for sid, msg in events:
            if isinstance(msg, proto.Chkpt):
                # Relay on the parent active session's connection, then start
                # accepting resume requests for the new snapshot.
                conn = self.conns.get(msg.pid)
                threading.Thread(
                    target=self._serve_snapshot, args=(msg.id,), daemon=True
                ).start()
            else:
                conn = self.conns.get(sid)
            if conn is not None:
                try:
                    send_frame(conn, msg)
                except OSError:
                    logger.warning("dropping event for closed connection %d", sid)

    def _session_loop(self, sid: int, conn: socket.socket) -> None:
        frames = SocketFrames(conn)
        try:
            while not self.stop.is_set():
                msg = frames.recv()
                if msg is None:
                    break
                if not isinstance(msg, proto.Submit):
                    raise proto.ProtocolError(
                        f"active session expects submit, got {msg.kind}"
                    )
                with self.lock:
                    events = self.host.submit(sid, msg.delta, eos=msg.eos)
                    self._route(events)
        except proto.ProtocolError as exc:
            logger.error("session %d aborted: %s", sid, exc)
        finally:
            with self.lock:
                self.conns.pop(sid, None)
                self.host.close_session(sid)
            conn.close()

    def _serve_snapshot(self, snap_id: int) -> None:
        path = f"{self.path}.{snap_id}"
        srv = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        srv.bind(path)
        srv.listen(4)
        srv.settimeout(0.5)
        while not self.stop.is_set():
            with self.lock:
                if snap_id not in self.host.snapshots:
                    break
            try:
                conn, _ = srv.accept()
            except socket.timeout:
                continue
            threading.Thread(
                target=self._handle_resume_conn, args=(snap_id, conn), daemon=True
            ).start()
        srv.close()

    def _handle_resume_conn(self, snap_id: int, conn: socket.socket) -> None:
        frames = SocketFrames(conn)
        try:
            msg = frames.recv()
            if not isinstance(msg, proto.Resume):
                raise proto.ProtocolError("snapshot endpoint expects resume")
            back = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
            back.connect(msg.chan)
            with self.lock:
                sid, events = self.host.resume(snap_id)
                self.conns[sid] = back
                self._route(events)
            self._session_loop(sid, back)
        except (proto.ProtocolError, OSError) as exc:
            logger.error("resume of snapshot %d failed: %s", snap_id, exc)
            try:
                send_frame(
                    conn,
                    proto.Error(off=0, cat="protocol_error", diag=str(exc)),
                )
            except OSError:
                pass
        finally:
            conn.close()

    def serve(self, ready: Optional[threading.Event] = None) -> None:
        srv = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        srv.bind(self.path)
        srv.listen(16)
        srv.settimeout(0.5)
        if ready is not None:
            ready.set()
        try:
            while not self.stop.is_set():
                try:
                    conn, _ = srv.accept()
                except socket.timeout:
                    continue
                with self.lock:
                    sid, events = self.host.start_session()
                    self.conns[sid] = conn
                    self._route(events)
                threading.Thread(
                    target=self._session_loop, args=(sid, conn), daemon=True
                ).start()
        finally:
            srv.close()


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="minichecker")
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--listen", metavar="PATH", help="serve protocol frames on a UNIX socket")
    mode.add_argument("--batch", metavar="FILE", help="check a complete file and print JSON")
    parser.add_argument("--interval", type=int, default=DEFAULT_INTERVAL)
    parser.add_argument(
        "--no-prologue-chkpt", action="store_true", help="disable the first-progress checkpoint"
    )
    args = parser.parse_args(argv)

    if args.batch is not None:
        with open(args.batch, encoding="utf-8") as fh:
            result = batch_check(fh.read())
        json.dump(result.to_json(), sys.stdout, separators=(",", ":"))
        sys.stdout.write("\n")
        return 0

    server = _Server(args.listen, args.interval, not args.no_prologue_chkpt)
    try:
        server.serve()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
