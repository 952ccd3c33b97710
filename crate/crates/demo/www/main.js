import init, { layerProfile, ctProfile, checkAxioms, modelNames } from "./pkg/oversmooth_demo.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function field(form, name) {
  const el = form.querySelector(`[name=${name}]`);
  if (el.type === "checkbox") return el.checked;
  if (el.type === "number") return Number(el.value);
  return el.value;
}

function describeFit(fit) {
  if (fit.Err !== undefined) return `fit failed: ${fit.Err}`;
  const f = fit.Ok;
  return `${f.classification}  c2=${f.c2.toFixed(4)}  r2_exp=${f.r2_exp.toFixed(3)}  r2_alg=${f.r2_alg.toFixed(3)}`;
}

// Log-scale y, linear x. Non-positive values are dropped from the path.
function plot(canvas, curves, xLabel) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = { l: 60, r: 150, t: 12, b: 30 };
  ctx.clearRect(0, 0, w, h);

  const xs = curves.flatMap(c => c.index);
  const ys = curves.flatMap(c => c.values).filter(v => v > 0);
  if (!xs.length || !ys.length) return;
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y0 = Math.log10(Math.min(...ys)), y1 = Math.log10(Math.max(...ys));
  const sx = x => pad.l + (x - x0) / ((x1 - x0) || 1) * (w - pad.l - pad.r);
  const sy = y => h - pad.b - (Math.log10(y) - y0) / ((y1 - y0) || 1) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad.l, pad.t, w - pad.l - pad.r, h - pad.t - pad.b);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  for (let e = Math.ceil(y0); e <= Math.floor(y1); e += Math.max(1, Math.ceil((y1 - y0) / 8))) {
    ctx.fillText(`1e${e}`, 8, sy(10 ** e) + 4);
  }
  ctx.fillText(`${x0}`, pad.l, h - 10);
  ctx.fillText(`${x1}  ${xLabel}`, w - pad.r - 60, h - 10);

  curves.forEach((c, k) => {
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.beginPath();
    let started = false;
    c.index.forEach((x, i) => {
      const v = c.values[i];
      if (!(v > 0)) { started = false; return; }
      started ? ctx.lineTo(sx(x), sy(v)) : ctx.moveTo(sx(x), sy(v));
      started = true;
    });
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(c.measure, w - pad.r + 10, pad.t + 14 * (k + 1));
  });
}

function wire(id, run) {
  const form = document.getElementById(id);
  const out = form.querySelector("pre");
  form.querySelector("button").addEventListener("click", () => {
    out.classList.remove("err");
    try {
      run(form, out);
    } catch (e) {
      out.classList.add("err");
      out.textContent = String(e);
    }
  });
}

await init();

const select = document.querySelector("#layers select[name=model]");
for (const m of JSON.parse(modelNames())) select.add(new Option(m));

wire("layers", (f, out) => {
  const p = JSON.parse(layerProfile(field(f, "model"), field(f, "graph"), field(f, "depth"),
    field(f, "width"), field(f, "seed"), field(f, "bias")));
  plot(f.querySelector("canvas"), p.curves, "layer");
  out.textContent = [`${p.run_id}  (${p.nodes} nodes, ${p.edges} edges)`,
    ...p.curves.map(c => `${c.measure}: ${describeFit(c.fit)}`)].join("\n");
});

wire("ct", (f, out) => {
  const p = JSON.parse(ctProfile(field(f, "dynamics"), field(f, "graph"), field(f, "t_end"),
    field(f, "dt"), field(f, "seed")));
  plot(f.querySelector("canvas"), p.curves, "t");
  out.textContent = `${p.run_id}\n${p.curves[0].measure}: ${describeFit(p.curves[0].fit)}`;
});

wire("axioms", (f, out) => {
  const r = JSON.parse(checkAxioms(field(f, "measure"), field(f, "graph"), field(f, "trials"),
    field(f, "dim"), field(f, "positive"), field(f, "seed")));
  const lines = r.checks.map(([name, v]) => {
    const ce = v.counterexample ? `  counterexample at trial ${v.counterexample.trial}` : "";
    return `${v.passed ? "pass" : "FAIL"}  ${name} (${v.trials} trials)${ce}`;
  });
  lines.push(`node-similarity measure: ${r.node_similarity ? "yes" : "no"}`);
  out.textContent = lines.join("\n");
});
