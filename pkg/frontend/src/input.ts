/**
 * Keyboard / gamepad capture mapped to control axes.
 *
 * Keys: arrows or WASD. Held keys ramp their axis at a fixed slew rate;
 * released axes decay back to zero faster. Outbound messages are limited to
 * 20 Hz; the caller drops inputs entirely while disconnected or observing.
 */

export const STEER_SLEW_PER_S = 2.0;
export const PEDAL_SLEW_PER_S = 2.5;
export const RETURN_SLEW_PER_S = 4.0;
export const SEND_INTERVAL_MS = 50; // 20 Hz cap

export interface ControlAxes {
  steering: number; // [-1, 1], positive right
  throttle: number; // [0, 1]
  brake: number; // [0, 1]
}

interface HeldKeys {
  left: boolean;
  right: boolean;
  accel: boolean;
  brake: boolean;
}

const KEY_MAP: Record<string, keyof HeldKeys> = {
  ArrowLeft: "left",
  KeyA: "left",
  ArrowRight: "right",
  KeyD: "right",
  ArrowUp: "accel",
  KeyW: "accel",
  ArrowDown: "brake",
  KeyS: "brake",
};

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

function ramp(current: number, target: number, ratePerS: number, dt: number): number {
  const step = ratePerS * dt;
  if (current < target) return Math.min(target, current + step);
  if (current > target) return Math.max(target, current - step);
  return current;
}

export class InputCapture {
  axes: ControlAxes = { steering: 0, throttle: 0, brake: 0 };
  private held: HeldKeys = { left: false, right: false, accel: false, brake: false };
  private lastSentMs = -Infinity;
  private gamepadAxes: { steering: number; throttle: number; brake: number } | null = null;

  /** Returns true when the key is one of ours (caller preventDefaults). */
  keyDown(code: string): boolean {
    const slot = KEY_MAP[code];
    if (!slot) return false;
    this.held[slot] = true;
    return true;
  }

  keyUp(code: string): boolean {
    const slot = KEY_MAP[code];
    if (!slot) return false;
    this.held[slot] = false;
    return true;
  }

  releaseAll(): void {
    this.held = { left: false, right: false, accel: false, brake: false };
    this.gamepadAxes = null;
  }

  /** Gamepad overrides the keyboard while any of its axes are deflected. */
  applyGamepad(axes: ReadonlyArray<number>): void {
    const steering = clamp(axes[0] ?? 0, -1, 1);
    const lever = clamp(axes[1] ?? 0, -1, 1); // stick forward = negative
    const throttle = lever < 0 ? -lever : 0;
    const brake = lever > 0 ? lever : 0;
    const active =
      Math.abs(steering) > 0.08 || throttle > 0.08 || brake > 0.08;
    this.gamepadAxes = active ? { steering, throttle, brake } : null;
  }

  /** Advance the axes by dt seconds of slew. */
  update(dt: number): ControlAxes {
    if (this.gamepadAxes) {
      this.axes = { ...this.gamepadAxes };
      return this.axes;
    }
    let steerTarget = 0;
    if (this.held.left && !this.held.right) steerTarget = -1;
    if (this.held.right && !this.held.left) steerTarget = 1;
    const steerRate = steerTarget === 0 ? RETURN_SLEW_PER_S : STEER_SLEW_PER_S;
    this.axes.steering = clamp(ramp(this.axes.steering, steerTarget, steerRate, dt), -1, 1);

    const throttleTarget = this.held.accel ? 1 : 0;
    const throttleRate = throttleTarget === 0 ? RETURN_SLEW_PER_S : PEDAL_SLEW_PER_S;
    this.axes.throttle = clamp(ramp(this.axes.throttle, throttleTarget, throttleRate, dt), 0, 1);

    const brakeTarget = this.held.brake ? 1 : 0;
    const brakeRate = brakeTarget === 0 ? RETURN_SLEW_PER_S : PEDAL_SLEW_PER_S;
    this.axes.brake = clamp(ramp(this.axes.brake, brakeTarget, brakeRate, dt), 0, 1);
    return this.axes;
  }

  /** True when any axis is meaningfully deflected. */
  engaged(): boolean {
    return (
      Math.abs(this.axes.steering) > 0.01 ||
      this.axes.throttle > 0.01 ||
      this.axes.brake > 0.01
    );
  }

  /** Rate limiter for outbound human_input messages. */
  shouldSend(nowMs: number): boolean {
    if (nowMs - this.lastSentMs < SEND_INTERVAL_MS) return false;
    this.lastSentMs = nowMs;
    return true;
  }
}
