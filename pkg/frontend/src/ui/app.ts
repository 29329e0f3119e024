/**
 * Demo page wiring: model selector, microphone capture into the rolling
 * window, an inference tick every stride, posterior bars, a latency
 * readout, and detection banners.  After the initial asset loads the page
 * performs no further network requests; all processing stays local.
 */

import { startCapture, type CaptureHandle } from "../audio/capture.js";
import { RollingWindow } from "../audio/ring.js";
import { downsampleTo16k } from "../audio/resample.js";
import { infer_pcm, load_model, model_labels, unload_model } from "../engine/index.js";
import { Detector, DEFAULT_DETECTOR } from "./detect.js";

const STRIDE_MS = 250;

const el = {
  start: document.getElementById("start") as HTMLButtonElement,
  stop: document.getElementById("stop") as HTMLButtonElement,
  models: document.getElementById("models") as HTMLSelectElement,
  bars: document.getElementById("bars") as HTMLDivElement,
  latency: document.getElementById("latency") as HTMLDivElement,
  banner: document.getElementById("banner") as HTMLDivElement,
  error: document.getElementById("error") as HTMLDivElement,
};

interface State {
  handle: number | null;
  labels: string[];
  capture: CaptureHandle | null;
  timer: number | null;
  ring: RollingWindow;
  detector: Detector;
  bars: HTMLDivElement[];
}

const state: State = {
  handle: null,
  labels: [],
  capture: null,
  timer: null,
  ring: new RollingWindow(),
  detector: new Detector(),
  bars: [],
};

function showError(message: string): void {
  el.error.textContent = message;
  el.error.style.display = "block";
  pause();
}

function pause(): void {
  if (state.timer !== null) {
    window.clearInterval(state.timer);
    state.timer = null;
  }
  if (state.capture) {
    state.capture.stop();
    state.capture = null;
  }
  el.start.disabled = false;
  el.stop.disabled = true;
}

function renderBars(posteriors?: number[]): void {
  if (state.bars.length !== state.labels.length) {
    el.bars.innerHTML = "";
    state.bars = state.labels.map((label) => {
      const row = document.createElement("div");
      row.className = "bar-row";
      const name = document.createElement("span");
      name.className = "bar-label";
      name.textContent = label;
      const track = document.createElement("div");
      track.className = "bar-track";
      const fill = document.createElement("div");
      fill.className = "bar-fill";
      track.appendChild(fill);
      row.appendChild(name);
      row.appendChild(track);
      el.bars.appendChild(row);
      return fill as HTMLDivElement;
    });
  }
  if (posteriors) {
    posteriors.forEach((p, i) => {
      state.bars[i].style.width = `${(100 * p).toFixed(1)}%`;
      state.bars[i].classList.toggle("hot", p >= DEFAULT_DETECTOR.threshold);
    });
  }
}

async function loadSelectedModel(): Promise<void> {
  const name = el.models.value;
  const response = await fetch(`./assets/models/${name}.kwsm`);
  if (!response.ok) {
    throw new Error(`failed to fetch model ${name}: HTTP ${response.status}`);
  }
  const bytes = new Uint8Array(await response.arrayBuffer());
  if (state.handle !== null) {
    unload_model(state.handle);
  }
  state.handle = load_model(bytes);
  state.labels = model_labels(state.handle);
  state.bars = [];
  renderBars();
}

function tick(): void {
  if (state.handle === null) return;
  try {
    const pcm = state.ring.snapshot();
    const result = infer_pcm(state.handle, pcm);
    renderBars(result.posteriors);
    el.latency.textContent =
      `featurize ${result.featurize_ms.toFixed(1)} ms · ` +
      `forward ${result.forward_ms.toFixed(1)} ms · ` +
      `model ${el.models.value}`;
    const hit = state.detector.update(result.posteriors, state.labels, performance.now());
    if (hit) {
      el.banner.textContent = `${hit.label} (${(100 * hit.posterior).toFixed(0)}%)`;
      el.banner.classList.add("visible");
      window.setTimeout(() => el.banner.classList.remove("visible"), 600);
    }
  } catch (err) {
    showError(`inference failed: ${(err as Error).message}`);
  }
}

async function start(): Promise<void> {
  el.error.style.display = "none";
  try {
    if (state.handle === null) {
      await loadSelectedModel();
    }
    state.ring = new RollingWindow();
    state.capture = await startCapture((samples, rate) => {
      try {
        state.ring.push(downsampleTo16k(samples, rate));
      } catch (err) {
        showError((err as Error).message);
      }
    });
    state.timer = window.setInterval(tick, STRIDE_MS);
    el.start.disabled = true;
    el.stop.disabled = false;
  } catch (err) {
    showError(`microphone unavailable: ${(err as Error).message}`);
  }
}

async function populateModels(): Promise<void> {
  const response = await fetch("./assets/models/index.json");
  const names: string[] = await response.json();
  el.models.innerHTML = "";
  for (const name of names) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    el.models.appendChild(option);
  }
}

el.start.addEventListener("click", () => void start());
el.stop.addEventListener("click", pause);
el.models.addEventListener("change", () => {
  loadSelectedModel().catch((err) => showError((err as Error).message));
});

populateModels()
  .then(loadSelectedModel)
  .catch((err) => showError(`asset load failed: ${(err as Error).message}`));
