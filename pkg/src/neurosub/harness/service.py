"""Telemetry/command service: the simulator loop behind a WebSocket.

Exactly two concurrent activities: the sim loop (a thread that owns all
simulation state, paced to wall clock) and the asyncio connection handler
(owns the sockets). They communicate only through two bounded queues;
commands are applied at tick boundaries only, and a slow subscriber loses
its oldest frame messages rather than stalling the loop.
"""

from __future__ import annotations

import asyncio
import base64
import io
import json
import logging
import queue
import threading
import time
from dataclasses import replace

import numpy as np

from ..errors import DomainError
from ..haptics import OperatorModel
from ..perception.frame import write_pgm
from ..sim.scenario import Scenario, ScenarioRunner
from .protocol import (
    PROTOCOL_VERSION,
    CommandMessage,
    parse_command,
    telemetry,
)

logger = logging.getLogger(__name__)

COMMAND_QUEUE_SIZE = 256
TELEMETRY_QUEUE_SIZE = 512
CLIENT_QUEUE_SIZE = 64


def _pgm_bytes(frame) -> bytes:
    import tempfile

    # Small frames: round-trip through the canonical writer keeps one format.
    buf = io.BytesIO()
    data = np.round(frame.pixels * 255.0).astype(np.uint8)
    buf.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
    buf.write(data.tobytes())
    return buf.getvalue()


class SimService:
    def __init__(
        self,
        scenario: Scenario,
        real_time_factor: float = 1.0,
        out_dir=None,
    ):
        self.scenario = scenario
        self.real_time_factor = real_time_factor
        self.runner = ScenarioRunner(scenario, out_dir=out_dir)
        self.commands: queue.Queue = queue.Queue(maxsize=COMMAND_QUEUE_SIZE)
        self.telemetry_out: queue.Queue = queue.Queue(maxsize=TELEMETRY_QUEUE_SIZE)
        self.paused = False
        self.finished = False
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._last_theta_cmd: float | None = None

    # -- sim side (thread) ---------------------------------------------------

    def _emit(self, message: str) -> None:
        try:
            self.telemetry_out.put_nowait(message)
        except queue.Full:
            # Drop oldest frame messages first, then oldest of anything.
            try:
                dropped = None
                stash = []
                while True:
                    item = self.telemetry_out.get_nowait()
                    if dropped is None and '"type":"frame"' in item:
                        dropped = item
                        break
                    stash.append(item)
                    if len(stash) >= TELEMETRY_QUEUE_SIZE:
                        break
                if dropped is None and stash:
                    dropped = stash.pop(0)
                for item in stash:
                    self.telemetry_out.put_nowait(item)
                self.telemetry_out.put_nowait(message)
            except (queue.Empty, queue.Full):
                logger.warning("telemetry queue overflow; message dropped")

    def _apply_command(self, cmd: CommandMessage) -> None:
        runner = self.runner
        if cmd.type == "joystick":
            self._last_theta_cmd = float(cmd.payload["theta_x"])
            runner.external_theta = self._last_theta_cmd
            if runner.operator.profile != "external":
                runner.operator = replace(runner.operator, profile="external")
        elif cmd.type == "scenario-control":
            action = cmd.payload["action"]
            if action == "pause":
                self.paused = True
            elif action == "start":
                self.paused = False
                self.finished = False
            elif action == "reset":
                runner.reset()
                self.finished = False
                self._last_theta_cmd = None
            self._emit(
                telemetry("event", runner.tick, {"name": f"scenario_{action}"})
            )
        elif cmd.type == "param-update":
            key, value = cmd.payload["key"], cmd.payload["value"]
            if key == "beta":
                self.scenario.haze = replace(self.scenario.haze, beta=float(value))
            elif key == "current_enabled":
                runner.current_enabled = bool(value)
            elif key == "operator_profile":
                runner.operator = replace(runner.operator, profile=str(value))
            self._emit(
                telemetry(
                    "event",
                    runner.tick,
                    {"name": "param_updated", "detail": {"key": key, "value": value}},
                )
            )

    def revert_to_passive(self) -> None:
        """Connection handler lost the controlling client: queue the fallback
        so it lands at the next tick boundary."""
        try:
            self.commands.put_nowait(
                CommandMessage(
                    type="param-update",
                    payload={"key": "operator_profile", "value": "passive"},
                )
            )
            self._last_theta_cmd = None
        except queue.Full:
            logger.warning("command queue full while reverting operator profile")

    def _drain_commands(self) -> None:
        while True:
            try:
                cmd = self.commands.get_nowait()
            except queue.Empty:
                return
            self._apply_command(cmd)

    def _publish_tick(self) -> None:
        runner = self.runner
        s = self.scenario
        tick = runner.tick
        events = runner.events
        while self._event_cursor < len(events):
            ev = events[self._event_cursor]
            payload = {"name": ev["type"], "detail": {k: v for k, v in ev.items() if k != "type"}}
            self._emit(telemetry("event", ev["tick"], payload))
            self._event_cursor += 1
        if (tick - 1) % runner.control_every == 0:
            bbox = runner.bbox
            state_payload = {
                "t": (tick - 1) * s.dt_sim,
                "e_l": runner.e_l,
                "e_th": s.gains.e_th,
                "mode": runner.mode,
                "tau_final": runner.tau_final,
                "theta_x": runner.joystick.theta_x,
                "theta_d": runner.theta_d,
                "gate": runner.gate.engaged,
                "operator_profile": runner.operator.profile,
                "applied_theta_cmd": self._last_theta_cmd,
                "bbox": (
                    {
                        "cx": bbox.cx,
                        "cy": bbox.cy,
                        "w": bbox.w,
                        "h": bbox.h,
                        "stale": runner.det_stale,
                    }
                    if bbox is not None
                    else None
                ),
                "pose": {
                    "position": list(runner.vehicle.position),
                    "quat": list(runner.vehicle.quat),
                },
                "nu": list(runner.vehicle.nu),
            }
            self._emit(telemetry("state", tick - 1, state_payload))
        if (tick - 1) % runner.camera_every == 0 and runner.last_enhanced is not None:
            for kind, frame in (
                ("raw", runner.last_frame),
                ("enhanced", runner.last_enhanced),
            ):
                payload = {
                    "kind": kind,
                    "pgm_base64": base64.b64encode(_pgm_bytes(frame)).decode("ascii"),
                }
                self._emit(telemetry("frame", tick - 1, payload))

    def _loop(self) -> None:
        runner = self.runner
        self._event_cursor = 0
        dt_wall = self.scenario.dt_sim / self.real_time_factor
        next_deadline = time.monotonic()
        while not self._stop.is_set():
            self._drain_commands()  # tick-boundary atomicity
            if not self.paused and not self.finished:
                runner.step()
                self._publish_tick()
                if runner.tick >= runner.n_ticks:
                    self.finished = True
                    self._emit(telemetry("event", runner.tick, {"name": "scenario_finished"}))
                    runner.finish()
            next_deadline += dt_wall
            delay = next_deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_deadline = time.monotonic()  # fell behind; don't spiral

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, name="sim-loop", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)


async def serve(
    scenario: Scenario,
    host: str = "127.0.0.1",
    port: int = 8765,
    real_time_factor: float = 1.0,
    out_dir=None,
    ready_event: threading.Event | None = None,
) -> None:
    """Run the sim loop and fan telemetry out to every connected client."""
    import websockets

    service = SimService(scenario, real_time_factor, out_dir=out_dir)
    client_queues: dict = {}
    stopping = asyncio.Event()

    def _offer(q: asyncio.Queue, message: str) -> None:
        if q.full():
            # Shed oldest frame first for this slow subscriber.
            items = []
            dropped = False
            while not q.empty():
                item = q.get_nowait()
                if not dropped and '"type":"frame"' in item:
                    dropped = True
                    continue
                items.append(item)
            if not dropped and items:
                items.pop(0)
            for item in items:
                q.put_nowait(item)
        q.put_nowait(message)

    async def broadcast_pump():
        loop = asyncio.get_running_loop()

        def poll():
            try:
                return service.telemetry_out.get(timeout=0.2)
            except queue.Empty:
                return None

        while not stopping.is_set():
            message = await loop.run_in_executor(None, poll)
            if message is None:
                continue
            for q in list(client_queues.values()):
                _offer(q, message)

    async def sender(ws, q):
        while True:
            await ws.send(await q.get())

    async def handler(ws):
        # One sender per client; every outbound message goes through the
        # client queue so nothing else writes to the socket concurrently.
        q: asyncio.Queue = asyncio.Queue(maxsize=CLIENT_QUEUE_SIZE)
        client_queues[ws] = q
        send_task = asyncio.create_task(sender(ws, q))
        _offer(
            q,
            telemetry(
                "event",
                service.runner.tick,
                {"name": "connected", "detail": {"version": PROTOCOL_VERSION}},
            ),
        )
        try:
            async for raw in ws:
                try:
                    cmd = parse_command(raw, theta_max=service.scenario.operator.theta_max)
                except DomainError as err:
                    _offer(
                        q,
                        telemetry(
                            "event",
                            service.runner.tick,
                            {"name": "command_rejected", "detail": str(err)},
                        ),
                    )
                    continue
                try:
                    service.commands.put_nowait(cmd)
                except queue.Full:
                    _offer(
                        q,
                        telemetry(
                            "event",
                            service.runner.tick,
                            {"name": "command_rejected", "detail": "command queue full"},
                        ),
                    )
        finally:
            send_task.cancel()
            client_queues.pop(ws, None)
            if not client_queues:
                service.revert_to_passive()
            service._emit(
                telemetry("event", service.runner.tick, {"name": "client_disconnected"})
            )

    service.start()
    pump = asyncio.create_task(broadcast_pump())
    try:
        async with websockets.serve(handler, host, port, max_size=8 * 1024 * 1024):
            logger.info("serving on ws://%s:%d", host, port)
            if ready_event is not None:
                ready_event.set()
            await asyncio.Future()
    finally:
        stopping.set()
        pump.cancel()
        service.stop()
