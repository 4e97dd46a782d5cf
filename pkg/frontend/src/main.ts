/**
 * Entry point: websocket wiring, render loop, input pump.
 *
 * URL query: ?host=127.0.0.1&port=8700&role=controller|observer
 * The gateway assigns the actual role (first client controls); requesting
 * observer just means this client never sends inputs.
 */

import { InputCapture } from "./input.js";
import { decisionFeedViews } from "./panel.js";
import { cameraFor, drawGauge, renderWorld } from "./render.js";
import { humanInputMessage, interventionMessage, parseFrame, PLAN_PHRASES } from "./protocol.js";
import { SessionStore } from "./state.js";

function query(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function main(): void {
  const host = query("host", window.location.hostname || "127.0.0.1");
  const port = query("port", "8700");
  const wantObserver = query("role", "controller") === "observer";

  const worldCanvas = byId<HTMLCanvasElement>("world");
  const gaugeCanvas = byId<HTMLCanvasElement>("gauge");
  const feedEl = byId<HTMLDivElement>("feed");
  const bannerEl = byId<HTMLDivElement>("banner");
  const statusEl = byId<HTMLSpanElement>("status");
  const pickerEl = byId<HTMLSelectElement>("primitive");
  const interveneBtn = byId<HTMLButtonElement>("intervene");
  const interveneRawBtn = byId<HTMLButtonElement>("intervene-raw");

  for (const [slug, phrase] of Object.entries(PLAN_PHRASES)) {
    const option = document.createElement("option");
    option.value = slug;
    option.textContent = phrase;
    pickerEl.appendChild(option);
  }

  const store = new SessionStore();
  const input = new InputCapture();
  const ws = new WebSocket(`ws://${host}:${port}/ws`);

  const controlling = () =>
    !wantObserver && store.role === "controller" && store.connection === "open";

  ws.onopen = () => {
    store.connection = "open";
  };
  ws.onclose = () => {
    store.connection = "closed";
    input.releaseAll(); // inputs are dropped while disconnected
  };
  ws.onmessage = (event) => {
    const frame = parseFrame(String(event.data));
    if (frame === null) {
      store.droppedFrames += 1;
      console.warn("skipped malformed frame");
      return;
    }
    store.apply(frame);
  };

  document.addEventListener("keydown", (e) => {
    if (controlling() && input.keyDown(e.code)) e.preventDefault();
  });
  document.addEventListener("keyup", (e) => {
    if (input.keyUp(e.code)) e.preventDefault();
  });

  interveneBtn.addEventListener("click", () => {
    if (!controlling()) return;
    ws.send(JSON.stringify(interventionMessage(pickerEl.value)));
  });
  interveneRawBtn.addEventListener("click", () => {
    if (!controlling()) return;
    const { steering, throttle, brake } = input.axes;
    ws.send(JSON.stringify(interventionMessage(null, { steering, throttle, brake })));
  });

  // input pump: slew the axes and send at <= 20 Hz while engaged
  let lastPump = performance.now();
  setInterval(() => {
    const now = performance.now();
    const dt = (now - lastPump) / 1000;
    lastPump = now;
    const pads = navigator.getGamepads ? navigator.getGamepads() : [];
    const pad = pads && pads[0];
    if (pad) input.applyGamepad(pad.axes);
    input.update(dt);
    if (!controlling()) return;
    if ((input.engaged() || store.snapshot?.human_input) && input.shouldSend(now)) {
      const { steering, throttle, brake } = input.axes;
      ws.send(JSON.stringify(humanInputMessage(steering, throttle, brake)));
    }
  }, 25);

  const worldCtx = worldCanvas.getContext("2d")!;
  const gaugeCtx = gaugeCanvas.getContext("2d")!;

  function renderFeed(): void {
    const views = decisionFeedViews(store.decisions);
    feedEl.innerHTML = "";
    for (const view of views.slice(-12).reverse()) {
      const item = document.createElement("div");
      item.className = "decision";
      item.innerHTML =
        `<span class="badge badge-${view.badge}">${view.badgeLabel}</span> ` +
        `<b>${view.plan}</b> @ frame ${view.frame}` +
        `<div class="intent">intent: ${view.intent}</div>` +
        `<div class="rationale">${view.rationale}</div>`;
      feedEl.appendChild(item);
    }
  }

  function frameLoop(): void {
    const snapshot = store.snapshot;
    if (snapshot) {
      const cam = cameraFor(snapshot, worldCanvas.width, worldCanvas.height);
      const latest = store.latestDecision();
      renderWorld(worldCtx, snapshot, cam, latest ? latest.payload.choice : null);
    }
    drawGauge(gaugeCtx, store.uncertainty, store.thetaU, gaugeCanvas.width, gaugeCanvas.height);
    renderFeed();

    const role = wantObserver ? "observer (requested)" : store.role ?? "-";
    statusEl.textContent =
      `${store.connection} | role ${role} | ` +
      `${store.hello ? store.hello.scenario : "-"} | ` +
      (snapshot ? `t=${snapshot.sim_t.toFixed(1)}s rc=${(snapshot.route_completion * 100).toFixed(0)}%` : "-") +
      (store.episodeEnd
        ? ` | ended: ${store.episodeEnd.collided ? "collision" : "done"}`
        : "");
    if (store.connection === "closed") {
      bannerEl.textContent = "disconnected: inputs dropped, autonomy continues";
      bannerEl.style.display = "block";
    } else if (!controlling() && !wantObserver && store.role === "observer") {
      bannerEl.textContent = "observer role: another client controls";
      bannerEl.style.display = "block";
    } else {
      bannerEl.style.display = "none";
    }
    requestAnimationFrame(frameLoop);
  }
  requestAnimationFrame(frameLoop);
}

main();
