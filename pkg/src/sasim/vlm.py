"""Reasoning-service client: HTTP chat-completion backend plus offline stub.

The stub backend answers from an ordered keyword-rule table evaluated against
the prompt text, so the full suite runs with no network and no model. The HTTP
backend speaks the common chat-completions wire shape with bounded retries and
exponential backoff. Every call can be audited to a JSONL log.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import ConfigError, VlmUnavailable


@dataclass(frozen=True)
class VlmClientConfig:
    endpoint_url: str = ""
    model: str = ""
    credential_env: str = "SASIM_VLM_API_KEY"
    timeout_s: float = 10.0
    retries: int = 3
    backoff_s: float = 0.5
    audit_log_path: str | None = None


class AuditLog:
    """Append-only JSONL log of prompt/response exchanges."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def record(
        self,
        frame: int | None,
        prompt: str,
        raw_response: str,
        parsed_choice: str,
        latency_ms: float,
    ) -> None:
        entry = {
            "frame": frame,
            "prompt": prompt,
            "raw_response": raw_response,
            "parsed_choice": parsed_choice,
            "latency_ms": round(latency_ms, 3),
        }
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")


class HttpBackend:
    """Chat-completion-style HTTP client with retries and backoff."""

    def __init__(self, cfg: VlmClientConfig, sleep=time.sleep):
        if not cfg.endpoint_url:
            raise ConfigError("VLM endpoint URL is not configured")
        key = os.environ.get(cfg.credential_env, "")
        if not key:
            raise ConfigError(f"credential env var {cfg.credential_env} is not set")
        self.cfg = cfg
        self._key = key
        self._sleep = sleep

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        headers = {"Authorization": f"Bearer {self._key}"}
        delay = self.cfg.backoff_s
        last_error: Exception | None = None
        for _ in range(self.cfg.retries):
            try:
                resp = requests.post(
                    self.cfg.endpoint_url,
                    json=payload,
                    headers=headers,
                    timeout=self.cfg.timeout_s,
                )
                resp.raise_for_status()
                data = resp.json()
                return data["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                self._sleep(delay)
                delay *= 2.0
        raise VlmUnavailable(f"reasoning service failed after {self.cfg.retries} attempts: {last_error}")


def vlm_call(prompt: str, cfg: VlmClientConfig) -> str:
    """One-shot completion against the configured HTTP endpoint."""
    return HttpBackend(cfg).complete(prompt)


# ---------------------------------------------------------------------------
# Deterministic stub backend
# ---------------------------------------------------------------------------

_PLAN_RE = re.compile(r"suggest the plan: (.+?)\.\s*$", re.MULTILINE)
_LATEST_RE = re.compile(r"^\[\+0\.0 s\].*$", re.MULTILINE)
_VISIBILITY_RE = re.compile(r"visibility (\d+\.\d+)")
_OBJECT_RE = re.compile(
    r"an? (vehicle|pedestrian|traffic cone or sign|open car door|emergency vehicle|barrier) "
    r"(\d+\.\d+) m (ahead|behind), (\d+\.\d+) m (left|right), "
    r"(in your lane|\d+ lanes? to the (?:left|right)), "
    r"(stationary|approaching at \d+\.\d+ m/s|moving at \d+\.\d+ m/s)"
)


@dataclass(frozen=True)
class _SeenObject:
    kind: str
    distance: float
    ahead: bool
    lateral: float
    side: str
    in_ego_lane: bool
    motion: str

    @property
    def approaching(self) -> bool:
        return self.motion.startswith("approaching")

    @property
    def motion_speed(self) -> float:
        m = re.search(r"(\d+\.\d+) m/s", self.motion)
        return float(m.group(1)) if m else 0.0


def _parse_scene(prompt: str) -> tuple[list[_SeenObject], float]:
    latest = _LATEST_RE.findall(prompt)
    line = latest[-1] if latest else ""
    vis_match = _VISIBILITY_RE.search(line)
    visibility = float(vis_match.group(1)) if vis_match else 1.0
    objects = [
        _SeenObject(
            kind=m.group(1),
            distance=float(m.group(2)),
            ahead=m.group(3) == "ahead",
            lateral=float(m.group(4)),
            side=m.group(5),
            in_ego_lane=m.group(6) == "in your lane",
            motion=m.group(7),
        )
        for m in _OBJECT_RE.finditer(line)
    ]
    return objects, visibility


def _hazard_in_lane(objects: list[_SeenObject]) -> _SeenObject | None:
    best = None
    for obj in objects:
        if not obj.ahead or not obj.in_ego_lane or obj.distance > 35.0:
            continue
        if not obj.approaching and obj.motion_speed > 6.0:
            continue  # pulling away faster than a hazard
        if best is None or obj.distance < best.distance:
            best = obj
    return best


def _side_blocked(objects: list[_SeenObject], side: str) -> bool:
    for obj in objects:
        if not obj.ahead or obj.in_ego_lane or obj.side != side or obj.lateral < 1.0:
            continue
        limit = 35.0 if obj.approaching else 20.0
        if obj.distance < limit:
            return True
    return False


class DeterministicStubBackend:
    """Keyword-rule stand-in for the reasoning service.

    Encodes generic driving judgment over the narrated scene: accept human
    maneuvers that address a visible hazard, reject plans that head into one
    or stop without cause. Deterministic for a fixed prompt.
    """

    name = "stub-vlm"

    def complete(self, prompt: str) -> str:
        plan_match = _PLAN_RE.search(prompt)
        plan = plan_match.group(1).strip() if plan_match else ""
        objects, visibility = _parse_scene(prompt)
        hazard = _hazard_in_lane(objects)
        emergency = any(
            o.kind == "emergency vehicle" and o.ahead and o.distance <= 60.0 for o in objects
        )
        pedestrian = any(o.kind == "pedestrian" and o.ahead and o.distance <= 35.0 for o in objects)
        distracted = "Attention: distracted" in prompt
        low_visibility = visibility < 0.3

        slowing = plan in ("stop", "slow down")
        forward = plan == "drive forward"
        lane_change = plan.startswith("change lane")
        turning = plan in ("turn left", "turn right")
        target_side = "left" if plan.endswith("left") else "right"

        def reply(verdict: str, why: str, intent: str) -> str:
            return f"{why}\nDECISION: {verdict}\nINTENT: {intent}"

        if slowing and emergency:
            return reply(
                "HUMAN",
                "An emergency vehicle is nearby; easing off is the lawful, safe reaction.",
                "yield to the emergency vehicle",
            )
        if slowing and low_visibility:
            return reply(
                "HUMAN",
                "Visibility is severely degraded; the driver is slowing until the view recovers.",
                "slow down because the road ahead cannot be seen",
            )
        if forward and low_visibility:
            return reply(
                "AUTONOMY",
                "Pressing on while the camera view is washed out would be driving blind.",
                "keep speed despite degraded visibility",
            )
        if forward and emergency:
            return reply(
                "AUTONOMY",
                "Continuing at speed while an emergency vehicle approaches risks a violation.",
                "proceed without yielding to the emergency vehicle",
            )
        if forward and hazard is not None:
            return reply(
                "AUTONOMY",
                f"The lane is obstructed by a {hazard.kind} {hazard.distance:.1f} m ahead; "
                "driving forward heads straight into it.",
                "continue forward despite the obstruction",
            )
        if forward and pedestrian:
            return reply(
                "AUTONOMY",
                "A pedestrian is near the roadway ahead; holding speed toward them is reckless.",
                "keep speed past a crossing pedestrian",
            )
        if lane_change or turning:
            if distracted and turning and hazard is None:
                return reply(
                    "AUTONOMY",
                    "An abrupt turn from a distracted driver with nothing to avoid looks like a lapse.",
                    "swerve without an apparent reason",
                )
            if _side_blocked(objects, target_side):
                return reply(
                    "AUTONOMY",
                    f"The {target_side} side is not clear; moving over now would conflict with traffic.",
                    f"move to the {target_side} into occupied space",
                )
            if hazard is not None:
                return reply(
                    "HUMAN",
                    f"A {hazard.kind} blocks the lane ahead and the {target_side} side is clear; "
                    "steering around it preserves progress.",
                    "steer around the obstruction ahead",
                )
            return reply(
                "HUMAN",
                f"The {target_side} side is clear, so the requested maneuver is harmless.",
                f"move over to the {target_side}",
            )
        if slowing and (pedestrian or hazard is not None):
            what = "pedestrian" if pedestrian else hazard.kind
            return reply(
                "HUMAN",
                f"A {what} ahead justifies shedding speed now.",
                f"slow for the {what} ahead",
            )
        if plan == "stop" and hazard is None and not emergency and not low_visibility:
            return reply(
                "AUTONOMY",
                "Nothing in the scene calls for a halt; stopping here only blocks the route.",
                "stop without an apparent cause",
            )
        if plan == "slow down":
            return reply(
                "HUMAN",
                "Shedding some speed is rarely harmful; defer to the driver's caution.",
                "slow down out of caution",
            )
        if forward:
            return reply(
                "HUMAN",
                "The road ahead is clear and the driver wants to keep making progress.",
                "continue along the route",
            )
        return reply("AUTONOMY", "No stronger signal; keep the autonomous plan.", "keep the current plan")


class FailingBackend:
    """Test backend that always raises VlmUnavailable (fallback-path drills)."""

    name = "failing"

    def complete(self, prompt: str) -> str:
        raise VlmUnavailable("backend configured to fail")

