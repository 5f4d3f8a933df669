"""Session service: length-prefixed JSON messages over a local TCP socket.

Frame: 4-byte big-endian length, then a UTF-8 JSON object
{"kind": str, "session": str, "seq": int, "payload": {...}}.

Clients drive the live loop: record a demonstration sample by sample, learn,
load a scene, execute with streamed TickUpdate messages, and perturb objects
between ticks. Replies reuse the request kind; protocol violations get an
Error message and the session survives. Sessions are isolated by id.
"""

from __future__ import annotations

import json
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

from .demo import DemoSample, Demonstration
from .errors import BudgetExhaustedError, CobtError, ValidationError
from .geometry import Pose7
from .memory import GoalScene, MemoryStore, SkillRecord, adapt_goal, composite_bt, load_memory
from .pipeline import learn_skill
from .runtime import DEFAULT_MAX_TICKS, DEFAULT_TICK_RATE, ExecutionSession, TickStatus
from .sim import WorldState, scene_from_json

HEADER = struct.Struct(">I")
MAX_FRAME = 16 * 1024 * 1024

KINDS = {
    "StartDemo",
    "DemoSample",
    "EndDemo",
    "Learn",
    "LoadScene",
    "Execute",
    "TickUpdate",
    "Perturb",
    "SetGoalScene",
    "Compose",
    "Error",
}


def encode_frame(message: dict) -> bytes:
    body = json.dumps(message, separators=(",", ":")).encode("utf-8")
    return HEADER.pack(len(body)) + body


def read_frame(sock: socket.socket) -> dict | None:
    header = _read_exact(sock, HEADER.size)
    if header is None:
        return None
    (length,) = HEADER.unpack(header)
    if length > MAX_FRAME:
        raise ValidationError(f"frame too large: {length}")
    body = _read_exact(sock, length)
    if body is None:
        return None
    return json.loads(body.decode("utf-8"))


def _read_exact(sock: socket.socket, n: int) -> bytes | None:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


@dataclass
class _SessionState:
    session_id: str
    recording: list[DemoSample] | None = None
    record_rate: float = 100.0
    record_meta: dict = field(default_factory=dict)
    demo: Demonstration | None = None
    skill: SkillRecord | None = None
    world: WorldState | None = None
    goal_scene: GoalScene | None = None
    last_seq_in: int = -1
    seq_out: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


class _Connection:
    """One client connection: a reader thread feeding a worker thread."""

    def __init__(self, server: "CobtServer", sock: socket.socket):
        self.server = server
        self.sock = sock
        self.inbox: queue.Queue = queue.Queue()
        self.write_lock = threading.Lock()
        self.closed = threading.Event()

    def run(self) -> None:
        reader = threading.Thread(target=self._read_loop, daemon=True)
        reader.start()
        try:
            self._work_loop()
        finally:
            self.closed.set()
            try:
                self.sock.close()
            except OSError:
                pass

    def _read_loop(self) -> None:
        try:
            while not self.closed.is_set():
                msg = read_frame(self.sock)
                if msg is None:
                    break
                self.inbox.put(msg)
        except (OSError, ValueError, ValidationError):
            pass
        finally:
            self.inbox.put(None)

    def _work_loop(self) -> None:
        while True:
            msg = self.inbox.get()
            if msg is None:
                return
            self._handle(msg)

    def send(self, session: _SessionState, kind: str, payload: dict) -> None:
        with session.lock:
            seq = session.seq_out
            session.seq_out += 1
        frame = encode_frame(
            {"kind": kind, "session": session.session_id, "seq": seq, "payload": payload}
        )
        with self.write_lock:
            try:
                self.sock.sendall(frame)
            except OSError:
                self.closed.set()

    def _error(self, session: _SessionState, message: str) -> None:
        self.send(session, "Error", {"message": message})

    def _handle(self, msg: dict) -> None:
        session_id = str(msg.get("session", "default"))
        session = self.server.session(session_id)
        kind = msg.get("kind")
        payload = msg.get("payload", {}) or {}
        seq = msg.get("seq")
        if not isinstance(seq, int) or seq <= session.last_seq_in:
            self._error(session, f"seq must increase (got {seq!r})")
            return
        session.last_seq_in = seq
        if kind not in KINDS:
            self._error(session, f"unknown message kind {kind!r}")
            return
        handler = getattr(self, f"_on_{_snake(kind)}", None)
        if handler is None:
            self._error(session, f"{kind} is not a client message")
            return
        try:
            handler(session, payload)
        except ValidationError as exc:
            self._error(session, str(exc))
        except CobtError as exc:
            self._error(session, str(exc))
        except Exception as exc:  # session must survive handler bugs
            self._error(session, f"internal error: {exc}")

    # --- handlers ----------------------------------------------------------

    def _on_start_demo(self, session: _SessionState, payload: dict) -> None:
        session.recording = []
        session.record_rate = float(payload.get("rate_hz", 100.0))
        session.record_meta = dict(payload.get("meta", {}))
        self.send(session, "StartDemo", {"ok": True})

    def _on_demo_sample(self, session: _SessionState, payload: dict) -> None:
        if session.recording is None:
            self._error(session, "no demonstration in progress")
            return
        session.recording.append(
            DemoSample(
                t=float(payload["t"]),
                ee=Pose7.from_list(payload["ee"]).canonical(),
                gripper=float(payload["g"]),
                objects={
                    k: Pose7.from_list(v).canonical() for k, v in payload["objects"].items()
                },
            )
        )

    def _on_end_demo(self, session: _SessionState, payload: dict) -> None:
        if session.recording is None:
            self._error(session, "no demonstration in progress")
            return
        demo = Demonstration(
            session.recording, sample_rate_hz=session.record_rate, meta=session.record_meta
        )
        session.demo = demo
        session.recording = None
        if payload.get("save_path"):
            from .demo import save_demonstration

            save_demonstration(demo, payload["save_path"])
        self.send(session, "EndDemo", {"samples": len(demo)})

    def _on_learn(self, session: _SessionState, payload: dict) -> None:
        if session.demo is None:
            self._error(session, "no demonstration recorded")
            return
        result = learn_skill(
            session.demo,
            payload["target"],
            payload["goal"],
            payload.get("name", "session-skill"),
        )
        session.skill = result.record
        with self.server.memory_lock:
            if result.record.name in self.server.memory.names:
                self.server.memory._skills = [
                    s for s in self.server.memory._skills if s.name != result.record.name
                ]
            self.server.memory.save_skill(result.record)
        self.send(
            session,
            "Learn",
            {
                "bt": result.record.tree.to_json(),
                "actions": len(result.record.actions),
                "learn_time_s": result.learn_time_s,
                "boundaries": [int(b) for b in result.seg.boundaries],
                "states": [s.as_triple() for s in result.seg.states],
            },
        )

    def _on_load_scene(self, session: _SessionState, payload: dict) -> None:
        session.world = scene_from_json(payload["scene"])
        self.send(session, "LoadScene", {"objects": sorted(session.world.objects)})

    def _on_perturb(self, session: _SessionState, payload: dict) -> None:
        if session.world is None:
            self._error(session, "no scene loaded")
            return
        from .sim import perturb

        session.world = perturb(
            session.world, payload["object"], Pose7.from_list(payload["pose"])
        )
        self.send(session, "Perturb", {"ok": True, "object": payload["object"]})

    def _on_set_goal_scene(self, session: _SessionState, payload: dict) -> None:
        session.goal_scene = GoalScene.from_json(payload)
        self.send(session, "SetGoalScene", {"objects": sorted(session.goal_scene.objects)})

    def _on_compose(self, session: _SessionState, payload: dict) -> None:
        if session.goal_scene is None:
            self._error(session, "no goal scene set")
            return
        with self.server.memory_lock:
            adapted = adapt_goal(session.goal_scene, self.server.memory)
            if not adapted:
                self._error(session, "no memorized skills match the goal scene")
                return
            record = composite_bt(adapted, self.server.memory, name=payload.get("name", "composite"))
        session.skill = record
        self.send(
            session,
            "Compose",
            {
                "bt": record.tree.to_json(),
                "matches": [m.target for m in adapted.matches],
                "actions": len(record.actions),
            },
        )

    def _on_execute(self, session: _SessionState, payload: dict) -> None:
        skill = session.skill
        if payload.get("skill"):
            with self.server.memory_lock:
                skill = self.server.memory.get(payload["skill"])
        if skill is None:
            self._error(session, "no skill to execute")
            return
        if session.world is None:
            self._error(session, "no scene loaded")
            return
        decimate = max(1, int(payload.get("decimate", 1)))
        realtime = bool(payload.get("realtime", False))
        runner = ExecutionSession(
            skill.tree,
            skill.actions,
            session.world,
            tick_rate_hz=float(payload.get("tick_rate", DEFAULT_TICK_RATE)),
            max_ticks=int(payload.get("max_ticks", DEFAULT_MAX_TICKS)),
            time_scale=float(payload.get("time_scale", 2.0)),
        )
        status = TickStatus.RUNNING
        budget_hit = False
        while status is not TickStatus.SUCCESS:
            # apply perturbations and stash any other requests between ticks
            deferred = []
            while True:
                try:
                    pending = self.inbox.get_nowait()
                except queue.Empty:
                    break
                if pending is None:
                    return
                if pending.get("kind") == "Perturb" and pending.get("session") == session.session_id:
                    session.last_seq_in = max(session.last_seq_in, pending.get("seq", -1))
                    try:
                        runner.request_perturbation(
                            pending["payload"]["object"],
                            Pose7.from_list(pending["payload"]["pose"]),
                        )
                    except (KeyError, ValueError) as exc:
                        self._error(session, f"bad perturb payload: {exc}")
                else:
                    deferred.append(pending)
            for d in deferred:
                self.inbox.put(d)
            try:
                status = runner.tick()
            except BudgetExhaustedError:
                budget_hit = True
                break
            except ValidationError as exc:
                # e.g. perturbing a grasped object; report and continue
                self._error(session, str(exc))
                continue
            if (runner.tick_count - 1) % decimate == 0 or status is TickStatus.SUCCESS:
                self.send(session, "TickUpdate", runner.snapshot())
            if realtime:
                time.sleep(runner.dt)
        session.world = runner.world
        self.send(
            session,
            "Execute",
            {
                "success": status is TickStatus.SUCCESS and not budget_hit,
                "ticks": runner.tick_count,
                "action_executions": {
                    str(k): v for k, v in sorted(runner.trace.action_executions.items())
                },
            },
        )


def _snake(kind: str) -> str:
    out = []
    for i, ch in enumerate(kind):
        if ch.isupper() and i:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


class CobtServer:
    """Threaded TCP server multiplexing isolated sessions."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, memory_path=None):
        self.memory = load_memory(memory_path) if memory_path else MemoryStore()
        self.memory_lock = threading.Lock()
        self._sessions: dict[str, _SessionState] = {}
        self._sessions_lock = threading.Lock()
        self._listener = socket.create_server((host, port))
        self.host, self.port = self._listener.getsockname()[:2]
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def session(self, session_id: str) -> _SessionState:
        with self._sessions_lock:
            if session_id not in self._sessions:
                self._sessions[session_id] = _SessionState(session_id=session_id)
            return self._sessions[session_id]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()

    def _accept_loop(self) -> None:
        self._listener.settimeout(0.2)
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            conn = _Connection(self, sock)
            threading.Thread(target=conn.run, daemon=True).start()

    def wait(self) -> None:
        while not self._stop.is_set():
            time.sleep(0.2)

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
