import init, { figure1, converse, prop5 } from "./pkg/privsearch_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const $ = (id) => document.getElementById(id);

function call(fn, msg) {
  msg.textContent = "";
  msg.className = "";
  try {
    return JSON.parse(fn());
  } catch (e) {
    msg.textContent = String(e);
    msg.className = "error";
    return null;
  }
}

function axes(ctx, box, xr, yr) {
  const [x0, y0, w, h] = box;
  const sx = (x) => x0 + ((x - xr[0]) / (xr[1] - xr[0])) * w;
  const sy = (y) => y0 + h - ((y - yr[0]) / (yr[1] - yr[0])) * h;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(x0, y0, w, h);
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  for (let i = 0; i <= 4; i++) {
    const y = yr[0] + ((yr[1] - yr[0]) * i) / 4;
    ctx.fillText(y.toFixed(2), x0 - 34, sy(y) + 4);
    const x = xr[0] + ((xr[1] - xr[0]) * i) / 4;
    ctx.fillText(x.toFixed(0), sx(x) - 6, y0 + h + 14);
  }
  return [sx, sy];
}

function plotFigure() {
  const rows = call(() => figure1(Number($("fig-k").value), $("fig-n").value), $("fig-msg"));
  if (!rows) return;
  const canvas = $("fig-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const series = new Map();
  for (const r of rows) {
    if (!series.has(r.N)) series.set(r.N, { asymptote: r.asymptote, points: [] });
    series.get(r.N).points.push([r.K, r.normalized_bound]);
  }
  const kMax = Math.max(...rows.map((r) => r.K));
  const yMax = Math.max(...rows.map((r) => r.asymptote)) * 1.05;
  const [sx, sy] = axes(ctx, [50, 10, 700, 320], [2, Math.max(kMax, 3)], [1, yMax]);
  [...series.entries()].forEach(([n, s], i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(sx(2), sy(s.asymptote));
    ctx.lineTo(sx(kMax), sy(s.asymptote));
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.beginPath();
    s.points.forEach(([k, b], j) => (j ? ctx.lineTo(sx(k), sy(b)) : ctx.moveTo(sx(k), sy(b))));
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(`N = ${n}`, 770, 30 + 16 * i);
  });
}

function computeBound() {
  const v = call(
    () => converse($("cb-kind").value, Number($("cb-k").value), Number($("cb-m").value), Number($("cb-n").value)),
    $("cb-msg"),
  );
  if (!v) return;
  const r = v.report;
  $("cb-out").textContent = [
    `${v.label} family, K = ${v.K}, ${v.messages} messages, N = ${r.N} (${r.strategy} ordering)`,
    `normalized bound ${r.normalized_bound.toFixed(6)}  asymptote ${r.asymptote.toFixed(6)}  gap ${r.gap.toExponential(3)}`,
    `achievable rate ${v.achievable_rate.toFixed(6)} <= rate bound ${v.rate_upper_bound.toFixed(6)}`,
    `ordering ${r.sequence.join(" ")}`,
  ].join("\n");

  const canvas = $("cb-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const shown = r.terms.slice(0, 64);
  const [sx, sy] = axes(ctx, [50, 10, 780, 180], [0, shown.length], [0, 1]);
  const w = sx(1) - sx(0);
  shown.forEach((t, i) => {
    ctx.fillStyle = "#1f77b4";
    ctx.fillRect(sx(i) + 1, sy(t), Math.max(w - 2, 1), sy(0) - sy(t));
    ctx.fillStyle = "#d62728";
    const weighted = t / Math.pow(r.N, i);
    ctx.fillRect(sx(i) + 1, sy(weighted) - 1, Math.max(w - 2, 1), 2);
  });
}

function drawArcs(ctx, cx, cy, radius, k, arcs, title) {
  ctx.fillStyle = "#222";
  ctx.fillText(title, cx - radius, cy - radius - 16);
  const angle = (v) => -Math.PI / 2 + ((v - 1) / k) * 2 * Math.PI;
  for (let v = 1; v <= k; v++) {
    ctx.beginPath();
    ctx.arc(cx + radius * Math.cos(angle(v)), cy + radius * Math.sin(angle(v)), 2.5, 0, 2 * Math.PI);
    ctx.fill();
  }
  arcs.forEach((a, i) => {
    const r = radius + 10 + 9 * i;
    const first = a.members[0];
    ctx.strokeStyle = COLORS[i];
    ctx.lineWidth = 5;
    ctx.beginPath();
    ctx.arc(cx, cy, r, angle(first) - 0.1, angle(first) + (a.members.length - 1) * ((2 * Math.PI) / k) + 0.1);
    ctx.stroke();
    ctx.lineWidth = 1;
    ctx.fillStyle = COLORS[i];
    ctx.fillText(`S${a.index}`, cx + radius + 50, cy - 30 + 14 * i);
  });
}

function scan() {
  const v = call(() => prop5(Number($("p5-k").value)), $("p5-msg"));
  if (!v) return;
  const s = v.scan;
  const q = s.quarter_offset;
  $("p5-out").textContent = [
    `K = ${s.K}, ${s.triples_scanned} triples scanned`,
    `best triple ${s.argmax.join(", ")}: min(H2|1, H3|12) = ${s.max_min.toFixed(6)}`,
    `quarter-turn triple ${q.k1}, ${q.k2}, ${q.best_k3}: H2|1 = ${q.h2_given_1.toFixed(6)}, H3|12 = ${q.h3_given_12.toFixed(6)}`,
  ].join("\n");
  const canvas = $("p5-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "12px system-ui";
  drawArcs(ctx, 200, 200, 120, s.K, v.best_arcs, "best triple");
  drawArcs(ctx, 620, 200, 120, s.K, v.quarter_arcs, "quarter-turn triple");
}

await init();
$("fig-run").onclick = plotFigure;
$("cb-run").onclick = computeBound;
$("p5-run").onclick = scan;
plotFigure();
computeBound();
scan();
