import init, { regret_curves, anti_concentration, confidence } from "./pkg/linbandit_web.js";

const COLORS = { ensemble: "#1f77b4", phe: "#d62728", linucb: "#2ca02c", lints: "#9467bd" };
const PAD = 40;

const num = (id) => Number(document.getElementById(id).value);

function frame(canvas, xmax, ymax) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width - 2 * PAD;
  const h = canvas.height - 2 * PAD;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(PAD, PAD, w, h);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(String(xmax), PAD + w - 20, PAD + h + 14);
  ctx.fillText(ymax.toPrecision(3), 2, PAD + 4);
  ctx.fillText("0", PAD - 12, PAD + h);
  return {
    ctx,
    x: (v, lo = 0) => PAD + ((v - lo) / (xmax - lo)) * w,
    y: (v) => PAD + h - (v / ymax) * h,
  };
}

function line(ctx, xs, ys, color, width = 2) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(x, ys[i]) : ctx.moveTo(x, ys[i])));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function showError(target, e) {
  document.getElementById(target).textContent = `error: ${e.message ?? e}`;
}

function drawRegret() {
  let data;
  try {
    data = JSON.parse(regret_curves(num("r-dim"), num("r-arms"), num("r-horizon"),
      num("r-reps"), num("r-seed"), num("r-m")));
  } catch (e) {
    return showError("r-legend", e);
  }
  const canvas = document.getElementById("r-canvas");
  const tmax = data.curves[0].t.at(-1);
  const ymax = Math.max(...data.curves.flatMap((c) => c.q90)) || 1;
  const f = frame(canvas, tmax, ymax);
  for (const c of data.curves) {
    const xs = c.t.map((t) => f.x(t));
    f.ctx.globalAlpha = 0.15;
    f.ctx.fillStyle = COLORS[c.policy];
    f.ctx.beginPath();
    xs.forEach((x, i) => (i ? f.ctx.lineTo(x, f.y(c.q90[i])) : f.ctx.moveTo(x, f.y(c.q90[i]))));
    for (let i = xs.length - 1; i >= 0; i--) f.ctx.lineTo(xs[i], f.y(c.q10[i]));
    f.ctx.fill();
    f.ctx.globalAlpha = 1;
    line(f.ctx, xs, c.mean.map(f.y), COLORS[c.policy]);
  }
  document.getElementById("r-legend").innerHTML = data.curves
    .map((c) => `<span style="color:${COLORS[c.policy]}">■ ${c.policy}: ${c.mean.at(-1).toFixed(1)}</span>`)
    .join("");
}

function drawAnti() {
  let h;
  try {
    h = JSON.parse(anti_concentration(document.getElementById("a-family").value,
      num("a-dim"), num("a-draws"), num("a-seed")));
  } catch (e) {
    return showError("a-stats", e);
  }
  const canvas = document.getElementById("a-canvas");
  const lo = h.edges[0];
  const hi = h.edges.at(-1);
  const f = frame(canvas, hi, Math.max(...h.counts) || 1);
  h.counts.forEach((c, i) => {
    const x0 = f.x(h.edges[i], lo);
    const x1 = f.x(h.edges[i + 1], lo);
    f.ctx.fillStyle = h.edges[i] >= h.threshold ? "#d62728" : "#9ecae1";
    f.ctx.fillRect(x0, f.y(c), x1 - x0 - 1, f.y(0) - f.y(c));
  });
  const xt = f.x(h.threshold, lo);
  line(f.ctx, [xt, xt], [PAD, canvas.height - PAD], "#000", 1);
  document.getElementById("a-stats").textContent =
    `P(uᵀZ ≥ ${h.threshold.toFixed(3)}) ≈ ${h.hit_rate.toFixed(4)}   guaranteed ≥ ${h.floor.toFixed(4)}`;
}

function drawRadii() {
  let r;
  try {
    r = JSON.parse(confidence(num("c-sigma"), num("c-lambda"), num("c-s"), num("c-dim"),
      num("c-horizon"), num("c-delta"), num("c-arms")));
  } catch (e) {
    return showError("c-stats", e);
  }
  const canvas = document.getElementById("c-canvas");
  const f = frame(canvas, r.t.at(-1), r.beta_horizon * 1.05);
  line(f.ctx, r.t.map((t) => f.x(t)), r.beta.map(f.y), "#1f77b4");
  document.getElementById("c-stats").textContent = [
    `β_T        ${r.beta_horizon.toFixed(4)}`,
    `γ̃_T        ${r.gamma_tilde.toFixed(4)}`,
    `γ_T        ${r.gamma.toFixed(4)}`,
    `m (auto)   ${r.ensemble_size}`,
    `regret bound ${r.regret_bound.toExponential(4)}`,
  ].join("\n");
}

await init();
document.getElementById("r-run").onclick = drawRegret;
document.getElementById("a-run").onclick = drawAnti;
document.getElementById("c-run").onclick = drawRadii;
drawAnti();
drawRadii();
