import init, { probability_surface, simulate_cell, residual_curve } from "./pkg/bandit_lan_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guarded(f) {
  return () => {
    $("error").textContent = "";
    try {
      f();
    } catch (e) {
      $("error").textContent = String(e);
    }
  };
}

function drawSurface() {
  const s = JSON.parse(probability_surface($("s-policy").value, num("s-eps"), num("s-d1"), num("s-d2"), num("s-gap")));
  const c = $("surface");
  const g = c.getContext("2d");
  const pad = 30;
  const w = (c.width - pad) / s.d2.length;
  const h = (c.height - pad) / s.gap.length;
  g.clearRect(0, 0, c.width, c.height);
  s.p2.forEach((row, i) => {
    row.forEach((p, j) => {
      const shade = Math.round(255 * (1 - p));
      g.fillStyle = `rgb(${shade},${shade},${Math.min(255, shade + 40)})`;
      g.fillRect(pad + j * w, c.height - pad - (i + 1) * h, Math.ceil(w), Math.ceil(h));
    });
  });
  g.fillStyle = "#222";
  g.fillText("D2 = 1", pad, c.height - 10);
  g.fillText(`${s.d2.length}`, c.width - 25, c.height - 10);
  g.fillText(`${s.gap[s.gap.length - 1]}`, 2, 12);
  g.fillText("0", 10, c.height - pad);
}

function normalPdf(x) {
  return Math.exp(-0.5 * x * x) / Math.sqrt(2 * Math.PI);
}

function drawPanel(p) {
  const c = document.createElement("canvas");
  c.width = 235;
  c.height = 180;
  const g = c.getContext("2d");
  const n = p.counts.reduce((a, b) => a + b, 0) + p.underflow + p.overflow;
  let counts = p.counts;
  let lo = p.lo;
  let width = p.width;
  if (p.name === "D2") {
    // trim to the occupied range
    let last = counts.length - 1;
    while (last > 0 && counts[last] === 0) last--;
    counts = counts.slice(0, Math.max(last + 1, 5));
  }
  const isT = p.name !== "D2";
  const peak = Math.max(...counts, isT ? n * width * normalPdf(0) : 0, 1);
  const bw = (c.width - 10) / counts.length;
  const y = (v) => c.height - 20 - (v / peak) * (c.height - 40);
  g.fillStyle = "#7a9cc6";
  counts.forEach((v, i) => g.fillRect(5 + i * bw, y(v), Math.max(bw - 0.5, 0.5), c.height - 20 - y(v)));
  if (isT) {
    g.strokeStyle = "#c33";
    g.beginPath();
    for (let i = 0; i <= 120; i++) {
      const x = lo + (i / 120) * width * counts.length;
      const px = 5 + (i / 120) * (c.width - 10);
      const py = y(n * width * normalPdf(x));
      i === 0 ? g.moveTo(px, py) : g.lineTo(px, py);
    }
    g.stroke();
  }
  g.fillStyle = "#222";
  const ks = p.ks === null ? "" : ` KS=${p.ks.toFixed(3)}`;
  g.fillText(`${p.name}${ks}`, 6, 12);
  if (p.missing > 0) g.fillText(`missing ${p.missing}`, 6, 25);
  g.fillText(isT ? "-6" : "0", 4, c.height - 6);
  g.fillText(isT ? "6" : `${counts.length - 1}`, c.width - 22, c.height - 6);
  return c;
}

function runCell() {
  const r = JSON.parse(
    simulate_cell($("c-policy").value, 0.1, num("c-m1"), num("c-T"), num("c-reps"), num("c-seed")),
  );
  const box = $("panels");
  box.replaceChildren(...r.panels.map(drawPanel));
}

function runResidual() {
  const pts = JSON.parse(
    residual_curve($("r-policy").value, $("r-family").value, num("r-gap"), num("r-h1"), num("r-h2"), num("r-reps"), 7),
  );
  const c = $("residual");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const vals = pts.flatMap((p) => [p.q25_abs, p.q75_abs]).filter((v) => v > 0);
  if (vals.length === 0) {
    g.fillText("residual is zero to machine precision (Gaussian arms are exactly quadratic)", 20, 30);
    return;
  }
  const ymin = Math.log10(Math.min(...vals)) - 0.2;
  const ymax = Math.log10(Math.max(...vals)) + 0.2;
  const xs = (t) => 50 + ((Math.log10(t) - 2) / 2) * (c.width - 80);
  const ys = (v) => c.height - 30 - ((Math.log10(Math.max(v, 1e-300)) - ymin) / (ymax - ymin)) * (c.height - 50);
  g.strokeStyle = "#888";
  g.fillStyle = "#222";
  pts.forEach((p) => {
    g.beginPath();
    g.moveTo(xs(p.horizon), ys(p.q25_abs));
    g.lineTo(xs(p.horizon), ys(p.q75_abs));
    g.stroke();
    g.beginPath();
    g.arc(xs(p.horizon), ys(p.median_abs), 4, 0, 2 * Math.PI);
    g.fill();
    g.fillText(`T=${p.horizon}`, xs(p.horizon) - 18, c.height - 10);
    g.fillText(p.median_abs.toExponential(2), xs(p.horizon) + 6, ys(p.median_abs) - 4);
  });
}

await init();
$("s-run").onclick = guarded(drawSurface);
$("c-run").onclick = guarded(runCell);
$("r-run").onclick = guarded(runResidual);
guarded(drawSurface)();
