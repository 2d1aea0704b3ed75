import init, { heat, norm_traces, rule110 } from "./pkg/convexp_web.js";

const $ = (id) => document.getElementById(id);

function blit(canvas, rgba, width, height) {
  canvas.width = width;
  canvas.height = height;
  const img = new ImageData(new Uint8ClampedArray(rgba), width, height);
  canvas.getContext("2d").putImageData(img, 0, 0);
}

function drawHeat() {
  const t = Number($("heat-t").value);
  const h = heat(64, t);
  blit($("heat"), h.rgba, 64, 64);
  $("heat-readout").textContent =
    `t = ${t.toFixed(1)}   var x = ${h.variance_x.toFixed(6)}   var y = ${h.variance_y.toFixed(6)}   (2t = ${(2 * t).toFixed(6)})`;
  h.free();
}

function drawTraces() {
  const steps = 200;
  const gain = Number($("gain").value);
  const seed = Number($("trace-seed").value) >>> 0;
  const both = norm_traces(16, steps, gain, seed);
  const unitary = both.slice(0, steps + 1);
  const plain = both.slice(steps + 1);
  $("gain-readout").textContent = gain.toFixed(2);

  const c = $("traces");
  const g = c.getContext("2d");
  const pad = 36;
  const w = c.width - 2 * pad;
  const h = c.height - 2 * pad;
  const lo = -4, hi = 4; // log10 range
  const y = (v) => pad + h * (1 - (Math.min(hi, Math.max(lo, Math.log10(v))) - lo) / (hi - lo));
  const x = (n) => pad + (w * n) / steps;
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#ccc";
  g.fillStyle = "#666";
  g.font = "11px sans-serif";
  for (let e = lo; e <= hi; e += 2) {
    g.beginPath();
    g.moveTo(pad, y(10 ** e));
    g.lineTo(pad + w, y(10 ** e));
    g.stroke();
    g.fillText(`1e${e}`, 2, y(10 ** e) + 4);
  }
  g.fillText(`${steps} steps`, pad + w - 50, c.height - 8);
  for (const [trace, color] of [[plain, "#ff7f0e"], [unitary, "#1f77b4"]]) {
    g.strokeStyle = color;
    g.lineWidth = 2;
    g.beginPath();
    trace.forEach((v, n) => (n ? g.lineTo(x(n), y(v)) : g.moveTo(x(n), y(v))));
    g.stroke();
  }
  $("trace-readout").textContent =
    `after ${steps} steps: unitary ${unitary[steps].toPrecision(12)}, plain ${plain[steps].toExponential(3)}`;
}

function drawCa() {
  const noise = Number($("noise").value);
  const seed = Number($("ca-seed").value) >>> 0;
  const table = $("variant").value === "table";
  const a = rule110(200, 300, noise, seed, table);
  blit($("ca"), a.rgba, a.width, a.height);
  $("noise-readout").textContent = noise.toFixed(3);
  $("ca-readout").textContent = `${a.divergent_rows} of ${a.height} rows differ from exact Rule 110`;
  a.free();
}

await init();
for (const [ids, draw] of [
  [["heat-t"], drawHeat],
  [["gain", "trace-seed"], drawTraces],
  [["noise", "variant", "ca-seed"], drawCa],
]) {
  for (const id of ids) $(id).addEventListener("input", draw);
  draw();
}
