// Page bootstrap: connect, join, wire widgets to the protocol, and render.

import { FeedbackConnection } from "./connection.js";
import {
  activitySampleMessage,
  configureMessage,
  endSessionMessage,
  joinMessage,
  pedalInputMessage,
  setListenMessage,
  sliderInputMessage,
  startPhaseMessage,
  type Role,
  type SliderAxis,
} from "./protocol.js";
import { feedbackHueToCss, renderRing } from "./render.js";
import { InputSettler } from "./throttle.js";
import {
  applyMessage,
  initialViewModel,
  ownDot,
  setConnection,
  type ViewModel,
} from "./viewmodel.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function params() {
  const q = new URLSearchParams(window.location.search);
  return {
    url: q.get("server") ?? "ws://127.0.0.1:8700",
    sessionId: q.get("session") ?? "demo",
    role: (q.get("role") ?? "participant") as Role,
    seat: q.has("seat") ? Number(q.get("seat")) : 0,
    name: q.get("name") ?? "",
  };
}

function main(): void {
  const opts = params();
  let vm: ViewModel = initialViewModel(
    opts.sessionId,
    opts.role,
    opts.role === "participant" ? opts.seat : null,
  );

  const canvas = el<HTMLCanvasElement>("ring");
  const ctx = canvas.getContext("2d")!;
  const statusBar = el<HTMLElement>("status");
  const phaseBanner = el<HTMLElement>("phase");
  const selfPanel = el<HTMLElement>("self-panel");
  const errorBox = el<HTMLElement>("errors");
  const controls = el<HTMLElement>("controls");

  // Local widget state: positions being dragged are never overwritten by
  // server echoes until the drag settles.
  const dragging = new Set<string>();
  let rafPending = false;

  function scheduleRender(): void {
    if (rafPending) return;
    rafPending = true;
    requestAnimationFrame(() => {
      rafPending = false;
      render();
    });
  }

  function render(): void {
    renderRing(ctx, vm);
    statusBar.textContent = `${vm.connection} | session ${vm.sessionId} | role ${vm.role}` +
      (vm.seat !== null ? ` | seat ${vm.seat}` : "");
    statusBar.className = vm.connection;
    phaseBanner.textContent = vm.phase.replace("_", " ");
    errorBox.textContent = vm.lastError ?? "";
    renderSelfPanel();
    updateWidgetGates();
  }

  function renderSelfPanel(): void {
    const dot = ownDot(vm);
    if (vm.mode === "vc_feedback" && dot) {
      selfPanel.innerHTML = "";
      const disc = document.createElement("div");
      disc.className = "dot";
      const px = Math.round(16 + 40 * dot.size);
      disc.style.width = `${px}px`;
      disc.style.height = `${px}px`;
      disc.style.background = feedbackHueToCss(dot.hue);
      disc.style.opacity = String(0.25 + 0.75 * dot.intensity);
      selfPanel.appendChild(disc);
      return;
    }
    if (vm.mode === "simulation" && vm.speakerView) {
      const v = vm.speakerView;
      selfPanel.textContent =
        `channel ${v.ownChannel} | listening to ${v.tunedTo} | ` +
        (v.powered ? "system on" : "system off");
      return;
    }
    if (vm.mode === "tic" && vm.ballSizes && vm.seat !== null) {
      selfPanel.textContent = `your ball: size ${vm.ballSizes[vm.seat]?.toFixed(2) ?? "0"}`;
      return;
    }
    selfPanel.textContent = "";
  }

  // Feedback inputs are live only during the intervention.
  function inputsLive(): boolean {
    return vm.phase === "intervention" && vm.connection === "open";
  }

  function updateWidgetGates(): void {
    controls.querySelectorAll<HTMLInputElement | HTMLSelectElement>("[data-gated]").forEach(
      (widget) => {
        widget.disabled = !inputsLive();
      },
    );
  }

  // An evaluator learns its assigned target from the first dot addressed to
  // it for another seat (the server copies a target's dot to its source).
  let evaluatorTarget: number | null = null;

  const connection = new FeedbackConnection(opts.url, {
    onMessage: (msg) => {
      if (
        msg.type === "dot_update" &&
        opts.role === "participant" &&
        typeof msg.payload.seat === "number" &&
        msg.payload.seat !== opts.seat
      ) {
        evaluatorTarget = msg.payload.seat;
      }
      vm = applyMessage(vm, msg);
      scheduleRender();
    },
    onStatus: (status) => {
      vm = setConnection(vm, status);
      if (status === "open") {
        join();
      }
      scheduleRender();
    },
    onProtocolError: (reason) => {
      vm = { ...vm, lastError: `malformed message: ${reason}` };
      scheduleRender();
    },
  });

  function join(): void {
    connection.send(
      joinMessage(opts.sessionId, opts.role, {
        seat: opts.seat,
        displayName: opts.name || undefined,
      }),
    );
  }

  buildControls();
  connection.connect();
  render();

  function buildControls(): void {
    controls.innerHTML = "";
    if (opts.role === "observer") {
      addButton("start phase", () => connection.send(startPhaseMessage(opts.sessionId)));
      addButton("end session", () => connection.send(endSessionMessage(opts.sessionId)));
      for (const axis of ["hue", "size", "intensity"] as SliderAxis[]) {
        addObserverSlider(axis);
      }
      return;
    }
    if (opts.role !== "participant") return;

    // push-to-talk stands in for voice activity detection
    const talk = addButton("hold to talk", () => undefined);
    let talkTimer: number | null = null;
    talk.addEventListener("mousedown", () => {
      if (talkTimer !== null) return;
      const pump = () =>
        connection.send(activitySampleMessage(opts.sessionId, opts.seat, 1.0));
      pump();
      talkTimer = window.setInterval(pump, 100);
    });
    const stop = () => {
      if (talkTimer !== null) {
        window.clearInterval(talkTimer);
        talkTimer = null;
      }
    };
    talk.addEventListener("mouseup", stop);
    talk.addEventListener("mouseleave", stop);

    addPedalSlider();
    addChannelDial();
    for (const axis of ["hue", "size", "intensity"] as SliderAxis[]) {
      addEvaluatorSlider(axis);
    }
  }

  function addButton(label: string, onClick: () => void): HTMLButtonElement {
    const button = document.createElement("button");
    button.textContent = label;
    button.addEventListener("click", onClick);
    controls.appendChild(button);
    return button;
  }

  function addSlider(
    label: string,
    onSettled: (value: number) => void,
  ): HTMLInputElement {
    const wrap = document.createElement("label");
    wrap.textContent = label;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "1";
    slider.step = "0.01";
    slider.value = "0";
    slider.dataset.gated = "true";
    const settler = new InputSettler(onSettled);
    slider.addEventListener("input", () => {
      dragging.add(label);
      settler.move(Number(slider.value));
    });
    slider.addEventListener("change", () => {
      dragging.delete(label);
      settler.release(Number(slider.value));
    });
    wrap.appendChild(slider);
    controls.appendChild(wrap);
    return slider;
  }

  function addPedalSlider(): void {
    addSlider("pedal", (value) => {
      if (inputsLive() && vm.mode === "tic") {
        connection.send(pedalInputMessage(opts.sessionId, opts.seat, value));
      }
    });
  }

  function addEvaluatorSlider(axis: SliderAxis): void {
    addSlider(`evaluate ${axis}`, (value) => {
      if (inputsLive() && vm.mode === "vc_feedback" && evaluatorTarget !== null) {
        connection.send(
          sliderInputMessage(
            opts.sessionId,
            `evaluator-${opts.seat}`,
            evaluatorTarget,
            axis,
            value,
          ),
        );
      }
    });
  }

  function addObserverSlider(axis: SliderAxis): void {
    const targetInput = document.createElement("input");
    targetInput.type = "number";
    targetInput.min = "0";
    targetInput.value = "0";
    targetInput.title = "target seat";
    controls.appendChild(targetInput);
    addSlider(`observer ${axis}`, (value) => {
      if (inputsLive()) {
        connection.send(
          sliderInputMessage(
            opts.sessionId,
            "observer",
            Number(targetInput.value),
            axis,
            value,
          ),
        );
      }
    });
  }

  function addChannelDial(): void {
    const dial = document.createElement("select");
    dial.dataset.gated = "true";
    const rebuild = () => {
      dial.innerHTML = "";
      for (let channel = 0; channel < vm.nSeats; channel++) {
        const option = document.createElement("option");
        option.value = String(channel);
        option.textContent = `channel ${channel}`;
        dial.appendChild(option);
      }
    };
    rebuild();
    dial.addEventListener("focus", rebuild);
    dial.addEventListener("change", () => {
      if (inputsLive() && vm.mode === "simulation") {
        connection.send(setListenMessage(opts.sessionId, opts.seat, Number(dial.value)));
      }
    });
    const wrap = document.createElement("label");
    wrap.textContent = "dial";
    wrap.appendChild(dial);
    controls.appendChild(wrap);
  }
}

window.addEventListener("DOMContentLoaded", main);
