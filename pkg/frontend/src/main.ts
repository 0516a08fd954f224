// Browser wiring: canvas rendering, target dragging, sliders, badges and
// the sweep plot panel. All state shown on screen is a server response.

import { oodStatus } from "./badges.js";
import { OrbitCamera } from "./camera.js";
import { ServiceClient, SteeringSession } from "./client.js";
import { RateLimiter } from "./debounce.js";
import { renderSweepSvg } from "./plot.js";
import { buildLines, frameMarkers, mergePose } from "./skeleton.js";
import type {
  AmoResponse, IkResponse, ModelPayload, PoseSnapshot, PoseTarget,
  SweepCurveFile, Vec3,
} from "./types.js";

const $ = (id: string) => document.getElementById(id)!;

const canvas = $("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const cam = new OrbitCamera();
const client = new ServiceClient("");
const limiter = new RateLimiter(50); // <= 20 Hz

let model: ModelPayload | null = null;
let pose: PoseSnapshot | null = null;
let lastIk: IkResponse | null = null;
let lastAmo: AmoResponse | null = null;
let targets: { head: PoseTarget; left: PoseTarget; right: PoseTarget } | null = null;
let sliderMode = false;

const session = new SteeringSession(client, "ui", (s) => {
  lastIk = s.ik;
  lastAmo = s.amo;
  pose = mergePose(pose, s.amo.pose);
  refreshReadouts();
  draw();
}, (e) => banner(`request failed: ${e}`));

function banner(msg: string | null): void {
  const el = $("banner");
  el.textContent = msg ?? "";
  el.style.display = msg ? "block" : "none";
}

function targetFromFrame(p: PoseSnapshot, name: string): PoseTarget {
  const fr = p.frames[name];
  return { position: [...fr.position] as Vec3, rotation: fr.rotation };
}

async function boot(): Promise<void> {
  try {
    model = await client.getModel();
  } catch (e) {
    banner(`service unreachable: ${e}`);
    for (const el of document.querySelectorAll("input,button")) {
      (el as HTMLInputElement).disabled = true;
    }
    return;
  }
  pose = model.default_pose;
  targets = {
    head: targetFromFrame(pose, "head"),
    left: targetFromFrame(pose, "left_wrist"),
    right: targetFromFrame(pose, "right_wrist"),
  };
  ($("h-slider") as HTMLInputElement).value = String(model.standing_height);
  draw();
  refreshReadouts();
}

function draw(): void {
  if (!pose) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const colors = { bone: "#20323f", foot: "#a35d2a", gizmo: "#c02020", ground: "#d8dee4" };
  for (const line of buildLines(pose, cam, width, height)) {
    ctx.strokeStyle = colors[line.kind];
    ctx.lineWidth = line.kind === "bone" ? 3 : 1;
    ctx.beginPath();
    ctx.moveTo(line.x1, line.y1);
    ctx.lineTo(line.x2, line.y2);
    ctx.stroke();
  }
  if (targets) {
    const t: [string, PoseTarget][] = [
      ["head", targets.head], ["left", targets.left], ["right", targets.right]];
    for (const [name, target] of t) {
      const p = cam.project(target.position, width, height);
      if (!p) continue;
      ctx.fillStyle = "#c02020";
      ctx.beginPath();
      ctx.arc(p[0], p[1], 7, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillStyle = "#333";
      ctx.fillText(name, p[0] + 9, p[1] - 9);
    }
  }
  if (pose) {
    for (const m of frameMarkers(pose, ["torso"], cam, width, height)) {
      ctx.fillStyle = "#1565c0";
      ctx.fillRect(m.x - 3, m.y - 3, 6, 6);
    }
  }
}

function refreshReadouts(): void {
  if (!model) return;
  const cmd = sliderMode ? sliderCommand() : lastIk?.command ?? null;
  if (cmd) {
    $("cmd-rpy").textContent = cmd.rpy.map((v) => v.toFixed(2)).join(", ");
    $("cmd-h").textContent = cmd.h.toFixed(3);
    const status = oodStatus(cmd.rpy as Vec3, cmd.h, model.command_ranges);
    const badge = $("ood-badge");
    badge.textContent = status.ood ? `O.O.D.: ${status.axes.join(", ")}` : "I.D.";
    badge.className = status.ood ? "badge ood" : "badge id";
  }
  const conv = $("conv-badge");
  if (lastIk && !lastIk.converged) {
    conv.textContent = "solver: best-so-far";
    conv.className = "badge amber";
  } else {
    conv.textContent = "solver: converged";
    conv.className = "badge id";
  }
  if (lastAmo) {
    $("margin").textContent = lastAmo.com_margin.toFixed(3);
    $("achieved").textContent =
      `rpy ${lastAmo.achieved.rpy.map((v) => v.toFixed(2)).join(", ")}  ` +
      `h ${lastAmo.achieved.h.toFixed(3)}`;
    $("limits").textContent = lastAmo.within_limits ? "within limits" : "LIMIT HIT";
  }
  if (lastIk) {
    $("residuals").textContent = Object.entries(lastIk.pos_residuals)
      .map(([k, v]) => `${k}: ${(v * 1000).toFixed(1)}mm`).join("  ");
  }
}

function steer(): void {
  if (!targets) return;
  sliderMode = false;
  limiter.schedule(() => session.steer(targets!));
}

function sliderCommand(): { rpy: Vec3; h: number } {
  return {
    rpy: [Number(($("r-slider") as HTMLInputElement).value),
          Number(($("p-slider") as HTMLInputElement).value),
          Number(($("y-slider") as HTMLInputElement).value)] as Vec3,
    h: Number(($("h-slider") as HTMLInputElement).value),
  };
}

function steerSliders(): void {
  sliderMode = true;
  limiter.schedule(async () => {
    const cmd = sliderCommand();
    const qUpper = lastIk?.q_upper ?? new Array(14).fill(0);
    try {
      lastAmo = await client.amo("ui-sliders", qUpper, cmd.rpy, cmd.h);
      pose = mergePose(pose, lastAmo.pose);
      refreshReadouts();
      draw();
    } catch (e) {
      banner(`request failed: ${e}`);
    }
  });
}

// --- input handling -------------------------------------------------------
let drag: { kind: "orbit" } | { kind: "target"; name: "head" | "left" | "right" } | null = null;
let lastXY = [0, 0];

canvas.addEventListener("mousedown", (ev) => {
  lastXY = [ev.offsetX, ev.offsetY];
  drag = { kind: "orbit" };
  if (targets) {
    for (const name of ["head", "left", "right"] as const) {
      const p = cam.project(targets[name].position, canvas.width, canvas.height);
      if (p && Math.hypot(p[0] - ev.offsetX, p[1] - ev.offsetY) < 12) {
        drag = { kind: "target", name };
        break;
      }
    }
  }
});
canvas.addEventListener("mousemove", (ev) => {
  if (!drag) return;
  const dx = ev.offsetX - lastXY[0];
  const dy = ev.offsetY - lastXY[1];
  lastXY = [ev.offsetX, ev.offsetY];
  if (drag.kind === "orbit") {
    cam.orbit(-dx * 0.008, dy * 0.008);
    draw();
  } else if (targets) {
    const t = targets[drag.name];
    t.position = cam.dragInViewPlane(t.position, dx, dy, canvas.width, canvas.height);
    draw();
    steer();
  }
});
window.addEventListener("mouseup", () => (drag = null));
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  cam.zoom(ev.deltaY > 0 ? 1.1 : 0.9);
  draw();
});

for (const id of ["r-slider", "p-slider", "y-slider", "h-slider"]) {
  $(id).addEventListener("input", steerSliders);
}

// --- sweep plot panel -----------------------------------------------------
let currentCurve: SweepCurveFile | null = null;

function showCurve(curve: SweepCurveFile): void {
  currentCurve = curve;
  try {
    $("plot").innerHTML = renderSweepSvg(curve);
    $("plot-status").textContent =
      `${curve.axis}: ${curve.commanded.length} points`;
  } catch (e) {
    $("plot-status").textContent = `bad curve file: ${e}`;
  }
}

($("curve-file") as HTMLInputElement).addEventListener("change", async (ev) => {
  const input = ev.target as HTMLInputElement;
  if (!input.files?.length) {
    $("plot-status").textContent = "no curve loaded";
    return;
  }
  try {
    showCurve(JSON.parse(await input.files[0].text()) as SweepCurveFile);
  } catch (e) {
    $("plot-status").textContent = `bad curve file: ${e}`;
  }
});

$("live-sweep").addEventListener("click", async () => {
  if (!model) return;
  const axis = ($("sweep-axis") as HTMLSelectElement).value as
    "roll" | "pitch" | "yaw" | "height";
  const idr = model.command_ranges[axis];
  const pad = axis === "height" ? 0.1 : 0.4;
  const lo = idr[0] - pad;
  const hi = idr[1] + pad;
  const n = 25;
  const qUpper = lastIk?.q_upper ?? new Array(14).fill(0);
  const commanded: number[] = [];
  const achieved: number[] = [];
  $("plot-status").textContent = "sweeping...";
  try {
    for (let i = 0; i < n; i++) {
      const v = lo + ((hi - lo) * i) / (n - 1);
      const rpy: Vec3 = [0, 0, 0];
      let h = model.standing_height - 0.1;
      if (axis === "height") h = v;
      else rpy[{ roll: 0, pitch: 1, yaw: 2 }[axis]] = v;
      const resp = await client.amo("ui-sweep", qUpper, rpy, h);
      commanded.push(v);
      achieved.push(axis === "height" ? resp.achieved.h
                                      : resp.achieved.rpy[{ roll: 0, pitch: 1, yaw: 2 }[axis]]);
    }
    showCurve({ axis, commanded, achieved, id_range: idr });
  } catch (e) {
    $("plot-status").textContent = `sweep failed: ${e}`;
  }
});

void boot();
export { currentCurve };
