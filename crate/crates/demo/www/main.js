import init, { simulate, radiusExplorer, fwnnCurves } from "./pkg/encircle_demo.js";

const $ = (id) => document.getElementById(id);

function slider(parent, key, label, min, max, step, value, onInput) {
  const name = document.createElement("label");
  name.textContent = label;
  const input = document.createElement("input");
  Object.assign(input, { type: "range", min, max, step, value, id: key });
  const out = document.createElement("span");
  out.textContent = value;
  input.addEventListener("input", () => {
    out.textContent = input.value;
    if (onInput) onInput();
  });
  parent.append(name, input, out);
  return input;
}

// world-to-canvas transform fitted to a set of points
function frame(canvas, points, pad = 0.6) {
  let [x0, x1, y0, y1] = [Infinity, -Infinity, Infinity, -Infinity];
  for (const [x, y] of points) {
    x0 = Math.min(x0, x); x1 = Math.max(x1, x);
    y0 = Math.min(y0, y); y1 = Math.max(y1, y);
  }
  const span = Math.max(x1 - x0, y1 - y0) + 2 * pad;
  const cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  const s = canvas.width / span;
  return {
    to: ([x, y]) => [(x - cx) * s + canvas.width / 2, canvas.height / 2 - (y - cy) * s],
    from: ([px, py]) => [(px - canvas.width / 2) / s + cx, (canvas.height / 2 - py) / s + cy],
  };
}

function polyline(ctx, f, pts, color, width = 1) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [x, y] = f.to(p);
    i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
  });
  ctx.stroke();
}

function dot(ctx, f, p, color, r = 5) {
  const [x, y] = f.to(p);
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fill();
}

function series(canvas, lines, { log = false } = {}) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const tf = (v) => (log ? Math.log10(Math.max(v, 1e-16)) : v);
  const all = lines.flatMap((l) => l.values.map(tf)).filter(Number.isFinite);
  const lo = Math.min(...all), hi = Math.max(...all);
  const n = Math.max(...lines.map((l) => l.values.length));
  const pad = 20;
  for (const { values, color } of lines) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    values.forEach((v, i) => {
      const x = pad + (i / Math.max(n - 1, 1)) * (canvas.width - 2 * pad);
      const y = canvas.height - pad - ((tf(v) - lo) / (hi - lo || 1)) * (canvas.height - 2 * pad);
      i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();
  }
  ctx.fillStyle = "#666";
  ctx.fillText(log ? `1e${hi.toFixed(1)}` : hi.toPrecision(3), 2, 12);
  ctx.fillText(log ? `1e${lo.toFixed(1)}` : lo.toPrecision(3), 2, canvas.height - 4);
}

// closed-loop run

let sim = null;
const simInputs = {};

function drawSim() {
  if (!sim) return;
  const k = Math.min(+$("scrub").value, sim.x1.length - 1);
  $("scrub-k").textContent = `k = ${k}`;
  const canvas = $("traj");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pts = [...sim.x1, ...sim.x2, ...sim.targets.flat()];
  const f = frame(canvas, pts.filter((p) => p.every(Number.isFinite)));
  const from = Math.max(0, k - 60);
  polyline(ctx, f, sim.x1.slice(from, k + 1), "#1f77b4");
  polyline(ctx, f, sim.x2.slice(from, k + 1), "#d62728");
  for (const t of sim.targets) {
    polyline(ctx, f, t.slice(0, k + 1), "#bbb");
    dot(ctx, f, t[k], "#555");
  }
  polyline(ctx, f, sim.c_hat.slice(0, k + 1), "#2ca02c");
  dot(ctx, f, sim.c_hat[k], "#2ca02c", 4);
  dot(ctx, f, sim.x1[k], "#1f77b4");
  dot(ctx, f, sim.x2[k], "#d62728");
  const [cx, cy] = f.to(sim.c_hat[k]);
  const [ex] = f.to([sim.c_hat[k][0] + sim.radius[k], 0]);
  ctx.setLineDash([4, 4]);
  ctx.strokeStyle = "#2ca02c";
  ctx.beginPath();
  ctx.arc(cx, cy, Math.abs(ex - cx), 0, 2 * Math.PI);
  ctx.stroke();
  ctx.setLineDash([]);
}

function runSim() {
  const params = {
    beta: +simInputs.beta.value,
    rho: 2 / +simInputs.period.value,
    b: +simInputs.b.value,
    forgetting: +simInputs.forgetting.value,
    learning_rate: +simInputs.alpha.value,
    steps: +simInputs.steps.value,
    distance_std: +simInputs.noise.value,
    known_displacement: $("known").checked,
    stationary_targets: $("stationary").checked,
  };
  $("sim-error").textContent = "";
  try {
    sim = JSON.parse(simulate(JSON.stringify(params)));
  } catch (e) {
    $("sim-error").textContent = e.message;
    return;
  }
  $("summary").textContent = (sim.validated ? "" : "gain conditions fail\n") + sim.summary;
  $("scrub").max = sim.x1.length - 1;
  $("scrub").value = sim.x1.length - 1;
  series($("errors"), [
    { values: sim.as_error, color: "#9467bd" },
    { values: sim.estimation_error, color: "#2ca02c" },
  ], { log: true });
  drawSim();
}

// radius explorer

const geo = {
  agents: [[-3, 0.5], [3, -0.5]],
  targets: [[-1, 0], [0.2, 0.8], [1, -0.4]],
  c_hat: [0, 0],
};
let radiusInputs = {};
let radiusFrame = null;
let dragging = null;

function drawRadius() {
  const canvas = $("radius");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  radiusFrame = radiusFrame || frame(canvas, [[-5, -5], [5, 5]], 0);
  const f = radiusFrame;
  let out;
  try {
    out = JSON.parse(radiusExplorer(JSON.stringify({
      ...geo,
      b: +radiusInputs.b.value,
      rounding_step: +radiusInputs.step.value,
    })));
  } catch (e) {
    $("radius-out").textContent = e.message;
    return;
  }
  polyline(ctx, f, geo.agents, "#ddd");
  polyline(ctx, f, out.circle, "#2ca02c", 2);
  geo.targets.forEach((t) => dot(ctx, f, t, "#555"));
  dot(ctx, f, geo.c_hat, "#2ca02c");
  dot(ctx, f, geo.agents[0], "#1f77b4", 7);
  dot(ctx, f, geo.agents[1], "#d62728", 7);
  const truth = Math.max(...out.true_distances);
  $("radius-out").textContent =
    `farthest target from ranges: ${out.max_distance.toFixed(6)}\n` +
    `farthest target, true:        ${truth.toFixed(6)}\n` +
    `radius: ${out.radius}${out.clamped ? "  (inconsistent ranges clamped)" : ""}`;
}

function pick([px, py]) {
  const handles = [
    ...geo.agents.map((p, i) => ["agents", i, p]),
    ...geo.targets.map((p, i) => ["targets", i, p]),
    ["c_hat", null, geo.c_hat],
  ];
  for (const [key, i, p] of handles) {
    const [x, y] = radiusFrame.to(p);
    if (Math.hypot(x - px, y - py) < 10) return [key, i];
  }
  return null;
}

function pointer(ev) {
  const r = ev.target.getBoundingClientRect();
  return [ev.clientX - r.left, ev.clientY - r.top];
}

function setupRadius() {
  const c = $("radius-controls");
  radiusInputs = {
    b: slider(c, "rb", "margin b", 0.1, 2, 0.1, 0.8, drawRadius),
    step: slider(c, "rstep", "rounding step", 0, 2, 0.25, 1, drawRadius),
  };
  const canvas = $("radius");
  canvas.addEventListener("mousedown", (ev) => { dragging = pick(pointer(ev)); });
  canvas.addEventListener("mouseup", () => { dragging = null; });
  canvas.addEventListener("mouseleave", () => { dragging = null; });
  canvas.addEventListener("mousemove", (ev) => {
    if (!dragging) return;
    const p = radiusFrame.from(pointer(ev));
    const [key, i] = dragging;
    if (i === null) geo[key] = p; else geo[key][i] = p;
    drawRadius();
  });
  drawRadius();
}

// network response

let fwnnInputs = {};

function drawFwnn() {
  const scale = +fwnnInputs.h.value;
  let out;
  try {
    out = JSON.parse(fwnnCurves(JSON.stringify({
      learning_rate: +fwnnInputs.alpha.value,
      h: [0.3 * scale, 0.2 * scale, 0.1 * scale],
    })));
  } catch (e) {
    $("fwnn-out").textContent = e.message;
    return;
  }
  series($("wavelet"), [{ values: out.wavelet, color: "#1f77b4" }]);
  series($("residual"), [{ values: out.residual, color: "#d62728" }], { log: true });
  const p = out.final_prediction.map((v) => v.toExponential(3)).join(", ");
  $("fwnn-out").textContent =
    `input range ${out.delta_psi[0]} .. ${out.delta_psi[out.delta_psi.length - 1]}\n` +
    `residual ${out.residual[0].toExponential(3)} -> ${out.residual[out.residual.length - 1].toExponential(3)}\n` +
    `predicted displacement after training: (${p})`;
}

function setupFwnn() {
  const c = $("fwnn-controls");
  fwnnInputs = {
    alpha: slider(c, "falpha", "learning rate", 0.01, 0.99, 0.01, 0.1, drawFwnn),
    h: slider(c, "fh", "displacement scale", 1, 1500, 1, 1000, drawFwnn),
  };
  drawFwnn();
}

await init();
const sc = $("sim-controls");
simInputs.beta = slider(sc, "beta", "gain beta", -1.6, 0.3, 0.01, -0.85);
simInputs.period = slider(sc, "period", "steps per turn", 26, 120, 2, 48);
simInputs.b = slider(sc, "b", "margin b", 0.1, 2, 0.1, 0.8);
simInputs.forgetting = slider(sc, "forgetting", "forgetting factor", 0.01, 1, 0.01, 0.1);
simInputs.alpha = slider(sc, "alpha", "learning rate", 0.01, 0.99, 0.01, 0.01);
simInputs.noise = slider(sc, "noise", "range noise std", 0, 0.05, 0.001, 0);
simInputs.steps = slider(sc, "steps", "steps", 50, 1000, 10, 400);
$("run").addEventListener("click", runSim);
$("scrub").addEventListener("input", drawSim);
runSim();
setupRadius();
setupFwnn();
