import init, { rankSimulated, smoothCurves, estimateCenter } from "./pkg/ppdepth_wasm.js";

const POINTS = 301;
const $ = (id) => document.getElementById(id);
const canvas = $("plot");
const ctx = canvas.getContext("2d");

function status(text, error = false) {
  $("status").textContent = text;
  $("status").className = error ? "error" : "";
}

function num(id) {
  return Number($(id).value);
}

// Depth 0 is red, depth 1 is blue.
function depthColor(d) {
  const r = Math.round(220 * (1 - d));
  const b = Math.round(220 * d);
  return `rgba(${r},60,${b},0.75)`;
}

function plot(grid, curves, horizon) {
  const w = canvas.width, h = canvas.height, pad = 50;
  ctx.clearRect(0, 0, w, h);
  const top = Math.max(1e-9, ...curves.flatMap((c) => c.values));
  const x = (t) => pad + (t / horizon) * (w - 2 * pad);
  const y = (v) => h - pad - (v / top) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.lineWidth = 2;
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "24px sans-serif";
  ctx.fillText("0", pad - 8, h - pad + 30);
  ctx.fillText(String(horizon), w - pad - 20, h - pad + 30);
  ctx.fillText(top.toFixed(2), 4, pad + 8);
  for (const c of curves) {
    ctx.strokeStyle = c.color;
    ctx.lineWidth = c.width ?? 2;
    ctx.beginPath();
    grid.forEach((t, i) => (i ? ctx.lineTo(x(t), y(c.values[i])) : ctx.moveTo(x(t), y(c.values[i]))));
    ctx.stroke();
    ctx.fillStyle = c.color;
    for (const e of c.events ?? []) ctx.fillRect(x(e) - 2, h - pad - 14, 4, 12);
  }
}

function table(header, rows) {
  const head = `<tr>${header.map((c) => `<th>${c}</th>`).join("")}</tr>`;
  const body = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  $("details").innerHTML = `<table>${head}${body}</table>`;
}

const fmt = (v) => (Math.abs(v) >= 1e-3 || v === 0 ? v.toFixed(4) : v.toExponential(2));

function run(label, fn) {
  status(`${label}...`);
  setTimeout(() => {
    const start = performance.now();
    try {
      fn();
      status(`${label} done in ${Math.round(performance.now() - start)} ms`);
    } catch (e) {
      status(String(e.message ?? e), true);
    }
  }, 10);
}

function onRank() {
  run("ranking", () => {
    const horizon = num("horizon");
    const out = JSON.parse(
      rankSimulated($("model").value, num("rate"), num("n"), horizon, num("c2"), $("method").value, num("seed"), POINTS),
    );
    const maxDepth = Math.max(...out.curves.map((c) => c.depth), 1e-300);
    const curves = out.curves
      .slice()
      .reverse()
      .map((c) => ({ values: c.values, color: depthColor(c.depth / maxDepth), width: 1.5 }));
    curves.push({ values: out.center.values, events: out.center.events, color: "#000", width: 5 });
    plot(out.grid, curves, horizon);
    const shown = out.curves.slice(0, 5).concat(out.curves.slice(-5));
    table(
      ["rank", "id", "depth", "events"],
      shown.map((c) => [c.rank, c.id, fmt(c.depth), c.events.map((e) => e.toFixed(1)).join(" ")]),
    );
  });
}

function onSmooth() {
  run("smoothing", () => {
    const horizon = num("horizon");
    const out = JSON.parse(smoothCurves($("events").value, horizon, num("c2"), POINTS));
    const n = out.curves.length;
    const curves = out.curves.map((c, i) => ({
      values: c.values,
      events: c.events,
      color: `hsl(${(360 * i) / n},70%,45%)`,
    }));
    plot(out.grid, curves, horizon);
    table(["", ...out.curves.map((c) => c.id)], out.distances.map((row, i) => [out.curves[i].id, ...row.map(fmt)]));
  });
}

function onCenter() {
  run("estimating center", () => {
    const horizon = num("horizon");
    const text = $("events").value;
    const c2 = num("c2");
    const data = JSON.parse(smoothCurves(text, horizon, c2, POINTS));
    const out = JSON.parse(estimateCenter(text, horizon, c2, "combined", num("seed"), POINTS));
    const curves = data.curves.map((c) => ({ values: c.values, color: "rgba(80,80,200,0.5)" }));
    curves.push({ values: out.values, events: out.events, color: "#000", width: 5 });
    plot(data.grid, curves, horizon);
    table(
      ["dimension", "SSD"],
      out.per_dimension.map(([d, s]) => [d, fmt(s)]).concat([["center", out.events.map((e) => e.toFixed(2)).join(" ")]]),
    );
  });
}

await init();
$("rank").addEventListener("click", onRank);
$("smooth").addEventListener("click", onSmooth);
$("center").addEventListener("click", onCenter);
status("ready");
onRank();
