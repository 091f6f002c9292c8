import init, { sample_text, rank_words, sobol, pdp } from "./pkg/loadfeat_wasm.js";

const $ = (id) => document.getElementById(id);
const fmt = (x, d = 4) => (Number.isFinite(x) ? x.toFixed(d) : String(x));
const esc = (s) => String(s).replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]);

function timed(status, out, fn) {
  status.className = "status";
  status.textContent = "running…";
  // Let the status paint before the synchronous wasm call blocks.
  setTimeout(() => {
    const t0 = performance.now();
    try {
      fn();
      status.textContent = `${fmt(performance.now() - t0, 0)} ms`;
    } catch (e) {
      status.className = "status error";
      status.textContent = String(e);
      if (out) out.innerHTML = "";
    }
  }, 10);
}

function table(head, rows, rowClass = () => "") {
  const th = head.map((h) => `<th>${esc(h)}</th>`).join("");
  const body = rows
    .map((r, i) => `<tr class="${rowClass(i)}">${r.map((c, j) => `<td class="${j === 0 ? "word" : ""}">${c}</td>`).join("")}</tr>`)
    .join("");
  return `<table><tr>${th}</tr>${body}</table>`;
}

function rankWords() {
  const out = $("w-out");
  timed($("w-status"), out, () => {
    const r = JSON.parse(rank_words($("w-text").value, $("w-anchor").value, Number($("w-window").value), Number($("w-threshold").value)));
    const kept = r.entries.filter((e) => e.kept).length;
    const rows = r.entries.map((e) => [esc(e.word), fmt(e.pmi), fmt(e.cosine), fmt(e.dcw), e.kept ? "kept" : "dropped"]);
    out.innerHTML =
      `<p>${r.documents} documents, ${r.windows} windows, ${r.vocabulary} distinct words; ` +
      `${kept} kept, ${r.entries.length - kept} dropped, ${r.skipped} without a defined score.</p>` +
      table(["word", "PMI", "cosine", "score", ""], rows, (i) => (r.entries[i].kept ? "" : "dropped"));
  });
}

function bars(names, series, colors, width = 360, height = 220) {
  const pad = { l: 40, r: 10, t: 10, b: 30 };
  const w = width - pad.l - pad.r;
  const h = height - pad.t - pad.b;
  const lo = Math.min(0, ...series.flatMap((s) => s.values));
  const hi = Math.max(1, ...series.flatMap((s) => s.values));
  const y = (v) => pad.t + h - ((v - lo) / (hi - lo)) * h;
  const group = w / names.length;
  const bw = (group * 0.8) / series.length;
  let svg = `<svg width="${width}" height="${height}" font-size="11">`;
  for (const t of [0, 0.25, 0.5, 0.75, 1]) {
    svg += `<line x1="${pad.l}" x2="${pad.l + w}" y1="${y(t)}" y2="${y(t)}" stroke="#eee"/>`;
    svg += `<text x="${pad.l - 4}" y="${y(t) + 4}" text-anchor="end">${t}</text>`;
  }
  names.forEach((n, i) => {
    series.forEach((s, k) => {
      const v = s.values[i];
      const x = pad.l + i * group + group * 0.1 + k * bw;
      svg += `<rect x="${x}" y="${Math.min(y(v), y(0))}" width="${bw - 1}" height="${Math.abs(y(v) - y(0))}" fill="${colors[k]}"><title>${s.name} ${fmt(v)}</title></rect>`;
    });
    svg += `<text x="${pad.l + (i + 0.5) * group}" y="${height - 12}" text-anchor="middle">${esc(n)}</text>`;
  });
  series.forEach((s, k) => {
    svg += `<rect x="${pad.l + 8 + k * 80}" y="${pad.t}" width="10" height="10" fill="${colors[k]}"/>`;
    svg += `<text x="${pad.l + 22 + k * 80}" y="${pad.t + 9}">${esc(s.name)}</text>`;
  });
  return svg + "</svg>";
}

function runSobol() {
  timed($("s-status"), $("s-table"), () => {
    const r = JSON.parse(sobol($("s-fn").value, Number($("s-n").value), Number($("s-seed").value)));
    const rows = r.names.map((n, i) => [
      n,
      `${fmt(r.s1[i], 3)} ± ${fmt(r.s1_conf[i], 3)}`,
      fmt(r.exact_s1[i], 3),
      `${fmt(r.st[i], 3)} ± ${fmt(r.st_conf[i], 3)}`,
      fmt(r.exact_st[i], 3),
    ]);
    const pairs = r.s2.map((p) => [`${r.names[p.i]}+${r.names[p.j]}`, fmt(p.s2, 3)]);
    $("s-table").innerHTML = table(["input", "S1", "S1 exact", "ST", "ST exact"], rows) + table(["pair", "S2"], pairs);
    $("s-chart").innerHTML = bars(
      r.names,
      [
        { name: "S1", values: r.s1 },
        { name: "ST", values: r.st },
        { name: "ST exact", values: r.exact_st },
      ],
      ["#4e79a7", "#f28e2b", "#bab0ac"],
    );
  });
}

function runPdp() {
  const chart = $("p-chart");
  timed($("p-status"), chart, () => {
    const eq = Number($("p-eq").value);
    const r = JSON.parse(pdp(eq, Number($("p-slope").value), Number($("p-noise").value), Number($("p-grid").value), 7));
    const W = 640, H = 300, pad = { l: 55, r: 15, t: 15, b: 40 };
    const xs = r.grid, ys = r.pd;
    const x0 = xs[0], x1 = xs[xs.length - 1];
    const y0 = Math.min(...ys), y1 = Math.max(...ys);
    const sx = (v) => pad.l + ((v - x0) / (x1 - x0)) * (W - pad.l - pad.r);
    const sy = (v) => pad.t + (1 - (v - y0) / (y1 - y0 || 1)) * (H - pad.t - pad.b);
    const path = xs.map((x, i) => `${i ? "L" : "M"}${sx(x).toFixed(1)},${sy(ys[i]).toFixed(1)}`).join("");
    let svg = `<svg width="${W}" height="${H}" font-size="11">`;
    svg += `<line x1="${sx(eq)}" x2="${sx(eq)}" y1="${pad.t}" y2="${H - pad.b}" stroke="#bbb" stroke-dasharray="4 3"/>`;
    svg += `<path d="${path}" fill="none" stroke="#4e79a7" stroke-width="2"/>`;
    svg += `<circle cx="${sx(r.argmin)}" cy="${sy(Math.min(...ys))}" r="4" fill="#e15759"/>`;
    for (let t = 0; t <= 4; t++) {
      const xv = x0 + ((x1 - x0) * t) / 4, yv = y0 + ((y1 - y0) * t) / 4;
      svg += `<text x="${sx(xv)}" y="${H - pad.b + 15}" text-anchor="middle">${fmt(xv, 0)}</text>`;
      svg += `<text x="${pad.l - 5}" y="${sy(yv) + 4}" text-anchor="end">${fmt(yv, 0)}</text>`;
    }
    svg += `<text x="${W / 2}" y="${H - 5}" text-anchor="middle">maximum temperature (°F)</text>`;
    svg += `<text transform="translate(12 ${H / 2}) rotate(-90)" text-anchor="middle">partial dependence of load</text>`;
    svg += "</svg>";
    chart.innerHTML =
      svg +
      `<p>Curve minimum at ${fmt(r.argmin, 2)} °F; constructed equilibrium ${eq} °F; grid step ${fmt(r.step, 2)} °F.</p>`;
  });
}

await init();
$("w-text").value = sample_text();
$("w-run").onclick = rankWords;
$("s-run").onclick = runSobol;
$("p-run").onclick = runPdp;
$("p-eq").oninput = () => ($("p-eq-val").textContent = $("p-eq").value);
rankWords();
runSobol();
runPdp();
