"""Realtime websocket gateway for live teleoperation.

JSON frames over one websocket per client. Server frames carry a strictly
increasing `seq` and a `schema_version`; arbitration frames share a
correlation id between the request-shown and decision frames. The first
client to connect controls the vehicle; later clients observe.

Message types (`type` field):
  server -> client: hello, world_snapshot, uncertainty_update,
                    arbitration_request_shown, arbitration_decision,
                    episode_end, error
  client -> server: human_input {steering, throttle, brake},
                    intervention {plan?, steering?, throttle?, brake?}

The simulation advances on a background thread at the configured tick rate;
client inputs are queued and applied at the next tick boundary. Snapshots
broadcast at half the tick rate (10 Hz at the default 20 Hz tick).
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .abstraction import ControlState, PlanLabel, parse_plan_phrase
from .arbitration import Arbiter, TeamingMode
from .config import GlobalConfig
from .episode import ScriptHumanSource, Simulation
from .scenario import Scenario

SCHEMA_VERSION = 1
SNAPSHOT_DECIMATION = 2  # broadcast every 2nd tick: 10 Hz at a 20 Hz tick


def _vehicle_payload(v) -> dict:
    return {
        "x": round(v.x, 3),
        "y": round(v.y, 3),
        "heading": round(v.heading, 4),
        "speed": round(v.speed, 3),
        "half_length": v.half_length,
        "half_width": v.half_width,
    }


class GatewaySession:
    """Owns the live simulation thread and the outbound frame queue."""

    def __init__(
        self,
        scenario: Scenario,
        mode: TeamingMode,
        arbiter: Arbiter,
        cfg: GlobalConfig | None = None,
        realtime: bool = True,
    ):
        self.scenario = scenario
        self.mode = mode
        self.arbiter = arbiter
        self.cfg = cfg or GlobalConfig()
        self.realtime = realtime
        self.sim = Simulation(scenario, self.cfg, live=True)
        self.sim.listeners.append(self._on_sim_event)
        self._human_source = ScriptHumanSource() if scenario.human_script else None
        self._outbox: list[dict] = []
        self._outbox_lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._tick_count = 0
        self.last_human_input: dict | None = None

    # -- frame plumbing ------------------------------------------------

    def _queue(self, frame_type: str, payload: dict) -> None:
        with self._outbox_lock:
            self._outbox.append({"type": frame_type, "payload": payload})

    def drain(self) -> list[dict]:
        with self._outbox_lock:
            frames = self._outbox
            self._outbox = []
        return frames

    def _on_sim_event(self, record: dict) -> None:
        if record["type"] == "request":
            self._queue(
                "arbitration_request_shown",
                {
                    "correlation_id": record["correlation_id"],
                    "frame": record["frame"],
                    "human_plan": record["human_plan"],
                    "autonomy_plan": record["autonomy_plan"],
                    "mode": record["mode"],
                },
            )
        elif record["type"] == "decision":
            self._queue(
                "arbitration_decision",
                {
                    "correlation_id": record["correlation_id"],
                    "frame": record["frame"],
                    "choice": record["choice"],
                    "grounded_plan": record["grounded_plan"],
                    "rationale": record["rationale"],
                    "intent": record["intent"],
                    "fallback": record["fallback"],
                },
            )
        elif record["type"] == "tick":
            self._queue(
                "uncertainty_update",
                {
                    "frame": record["frame"],
                    "sim_t": record["sim_t"],
                    "u": record["u"],
                    "intra_raw": record["intra_raw"],
                    "inter_raw": record["inter_raw"],
                    "triggered": record["triggered"],
                },
            )
            if record["frame"] % SNAPSHOT_DECIMATION == 0:
                self._queue("world_snapshot", self._snapshot_payload(record))
        elif record["type"] == "end":
            self._queue(
                "episode_end",
                {
                    "frame": record["frame"],
                    "collided": record["collided"],
                    "route_completion": record["route_completion"],
                    "interventions": record["interventions"],
                },
            )

    def _snapshot_payload(self, tick_record: dict) -> dict:
        sim = self.sim
        applied = sim.applied_live_controls
        human_echo = (
            {
                "throttle": applied.throttle,
                "brake": applied.brake,
                "steering": applied.steering,
            }
            if applied is not None
            else None
        )
        actors = [
            {
                "id": spec.actor_id,
                "kind": spec.kind.value,
                "x": round(x, 3),
                "y": round(y, 3),
                "heading": round(heading, 4),
                "half_length": spec.half_length,
                "half_width": spec.half_width,
            }
            for spec, (x, y, heading) in sim.actor_poses()
        ]
        prim = sim.active_primitive
        return {
            "frame": tick_record["frame"],
            "sim_t": tick_record["sim_t"],
            "ego": _vehicle_payload(sim.ego),
            "actors": actors,
            "control_source": tick_record["source"],
            "autonomy_plan": tick_record["autonomy_plan"],
            "route_completion": tick_record["route_completion"],
            "active_plan": prim.spec.label.slug if prim else None,
            "planned_path": [[round(x, 2), round(y, 2)] for x, y in prim.ref_world] if prim else [],
            "gates": [
                {"x": g.x, "y": g.y, "radius": g.radius, "passed": i < sim.gates_passed}
                for i, g in enumerate(self.scenario.gates)
            ],
            "lanes": [
                {
                    "id": lane.lane_id,
                    "center": [list(p) for p in lane.center],
                    "width": lane.width,
                    "markings": {
                        "left": lane.markings.left.value,
                        "right": lane.markings.right.value,
                    },
                }
                for lane in self.scenario.lanes
            ],
            "human_input": human_echo,
        }

    # -- client input --------------------------------------------------

    def apply_human_input(self, payload: dict) -> None:
        control = ControlState(
            throttle=float(payload.get("throttle", 0.0)),
            brake=float(payload.get("brake", 0.0)),
            steering=float(payload.get("steering", 0.0)),
            speed_mps=self.sim.ego.speed,
        )
        self.last_human_input = {
            "throttle": control.throttle,
            "brake": control.brake,
            "steering": control.steering,
        }
        self.sim.queue_human_controls(control)

    def apply_intervention(self, payload: dict) -> None:
        plan: PlanLabel | None = None
        if payload.get("plan"):
            raw = str(payload["plan"])
            try:
                plan = parse_plan_phrase(raw)
            except ValueError:
                plan = PlanLabel.from_slug(raw.lower().replace(" ", "_"))
        control: ControlState | None = None
        if any(k in payload for k in ("steering", "throttle", "brake")):
            control = ControlState(
                throttle=float(payload.get("throttle", 0.0)),
                brake=float(payload.get("brake", 0.0)),
                steering=float(payload.get("steering", 0.0)),
                speed_mps=self.sim.ego.speed,
            )
        self.sim.queue_intervention(plan, control)

    # -- simulation thread ----------------------------------------------

    def tick(self) -> bool:
        """One simulation step; returns False once the episode ended."""
        if self.sim.finished():
            return False
        self.sim.tick_once(self.mode, self.arbiter, self._human_source)
        self._tick_count += 1
        if self.sim.finished():
            self.sim.emit(
                {
                    "type": "end",
                    "frame": self.sim.tick,
                    "collided": self.sim.collided,
                    "route_completion": self.sim.route_completion,
                    "ticks": self.sim.tick,
                    "interventions": self.sim.interventions,
                }
            )
            return False
        return True

    def start(self) -> None:
        if self._thread is not None:
            return

        def loop():
            dt = self.sim.dt
            next_deadline = time.monotonic()
            while not self._stop.is_set():
                if not self.tick():
                    break
                if self.realtime:
                    next_deadline += dt
                    delay = next_deadline - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)

        self._thread = threading.Thread(target=loop, name="sasim-tick", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)


def replay_message_log(
    scenario: Scenario,
    mode: TeamingMode,
    arbiter: Arbiter,
    cfg: GlobalConfig | None,
    live_records: list[dict],
) -> list[dict]:
    """Headless replay of a live session's recorded inputs.

    Re-applies every `live_input` record at its original frame and returns the
    fresh record stream, which must equal the live one for a deterministic
    simulator.
    """
    inputs: dict[int, list[dict]] = {}
    last_frame = 0
    for record in live_records:
        if record["type"] == "live_input":
            inputs.setdefault(record["frame"], []).append(record)
        if "frame" in record:
            last_frame = max(last_frame, record["frame"])
    sim = Simulation(scenario, cfg or GlobalConfig(), live=True)
    human_source = ScriptHumanSource() if scenario.human_script else None
    while not sim.finished() and sim.tick <= last_frame:
        for record in inputs.get(sim.tick, []):
            if record["kind"] == "controls":
                sim.queue_human_controls(
                    ControlState(
                        throttle=record["throttle"],
                        brake=record["brake"],
                        steering=record["steering"],
                        speed_mps=record["speed_mps"],
                    )
                )
            else:
                plan = PlanLabel.from_slug(record["plan"]) if record.get("plan") else None
                control = None
                if record.get("throttle") is not None:
                    control = ControlState(
                        throttle=record["throttle"],
                        brake=record["brake"],
                        steering=record["steering"],
                        speed_mps=record["speed_mps"],
                    )
                sim.queue_intervention(plan, control)
        sim.tick_once(mode, arbiter, human_source)
    if sim.finished():
        sim.emit(
            {
                "type": "end",
                "frame": sim.tick,
                "collided": sim.collided,
                "route_completion": sim.route_completion,
                "ticks": sim.tick,
                "interventions": sim.interventions,
            }
        )
    return sim.records


def create_gateway_app(
    scenario: Scenario,
    mode: TeamingMode,
    arbiter: Arbiter,
    cfg: GlobalConfig | None = None,
    realtime: bool = True,
) -> FastAPI:
    from contextlib import asynccontextmanager

    session = GatewaySession(scenario, mode, arbiter, cfg, realtime=realtime)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        session.start()
        task = asyncio.create_task(broadcaster())
        yield
        session.stop()
        task.cancel()

    app = FastAPI(title="sasim gateway", lifespan=lifespan)
    app.state.session = session
    clients: list[WebSocket] = []
    controller: dict = {"ws": None}
    seq_counters: dict[int, int] = {}

    async def send_frame(ws: WebSocket, frame_type: str, payload: dict) -> None:
        key = id(ws)
        seq_counters[key] = seq_counters.get(key, 0) + 1
        message = {
            "type": frame_type,
            "seq": seq_counters[key],
            "schema_version": SCHEMA_VERSION,
            "payload": payload,
        }
        await ws.send_text(json.dumps(message, sort_keys=True))

    async def broadcaster():
        while True:
            frames = session.drain()
            if frames:
                dead = []
                for ws in list(clients):
                    try:
                        for frame in frames:
                            await send_frame(ws, frame["type"], frame["payload"])
                    except Exception:
                        dead.append(ws)
                for ws in dead:
                    if ws in clients:
                        clients.remove(ws)
                    if controller["ws"] is ws:
                        controller["ws"] = None
            await asyncio.sleep(0.01)

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        clients.append(ws)
        role = "observer"
        if controller["ws"] is None:
            controller["ws"] = ws
            role = "controller"
        await send_frame(
            ws,
            "hello",
            {
                "role": role,
                "scenario": scenario.name,
                "mode": mode.value,
                "arbiter": getattr(arbiter, "name", "none"),
                "tick_hz": round(1.0 / session.sim.dt),
                "theta_u": session.cfg.uncertainty.theta_u,
            },
        )
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    message = json.loads(raw)
                    if not isinstance(message, dict) or "type" not in message:
                        raise ValueError("frame must be an object with a `type`")
                    mtype = message["type"]
                    payload = message.get("payload", {})
                    if mtype in ("human_input", "intervention") and controller["ws"] is not ws:
                        raise ValueError("only the controller may send inputs")
                    if mtype == "human_input":
                        session.apply_human_input(payload)
                    elif mtype == "intervention":
                        session.apply_intervention(payload)
                    else:
                        raise ValueError(f"unknown message type {mtype!r}")
                except (ValueError, KeyError, TypeError) as exc:
                    # malformed input: error frame, connection stays up
                    await send_frame(ws, "error", {"message": str(exc)})
        except WebSocketDisconnect:
            pass
        finally:
            if ws in clients:
                clients.remove(ws)
            if controller["ws"] is ws:
                # human disengaged; autonomy continues
                controller["ws"] = None

    return app
