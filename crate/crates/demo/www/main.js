import init, { note_info, pluck, mfcc_heatmap, align_take, sample_rate } from "./pkg/fretalign_demo.js";

const $ = (id) => document.getElementById(id);
let audio;
let lastTake;

function play(samples) {
  audio ??= new AudioContext();
  const buf = audio.createBuffer(1, samples.length, sample_rate());
  buf.copyToChannel(samples, 0);
  const src = audio.createBufferSource();
  src.buffer = buf;
  src.connect(audio.destination);
  src.start();
}

function drawWave(canvas, samples, marks = []) {
  const g = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  g.clearRect(0, 0, w, h);
  g.strokeStyle = "#444";
  g.beginPath();
  const per = Math.max(1, Math.floor(samples.length / w));
  for (let x = 0; x < w; x++) {
    let lo = 0, hi = 0;
    for (let i = x * per; i < Math.min(samples.length, (x + 1) * per); i++) {
      lo = Math.min(lo, samples[i]);
      hi = Math.max(hi, samples[i]);
    }
    g.moveTo(x + 0.5, h / 2 - hi * h / 2);
    g.lineTo(x + 0.5, h / 2 - lo * h / 2);
  }
  g.stroke();
  const seconds = samples.length / sample_rate();
  for (const { t, color, top } of marks) {
    const x = Math.round((t / seconds) * w) + 0.5;
    g.strokeStyle = color;
    g.beginPath();
    g.moveTo(x, top ? 0 : h / 2);
    g.lineTo(x, top ? h / 2 : h);
    g.stroke();
  }
}

function drawHeat(canvas, heat) {
  const g = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  g.clearRect(0, 0, w, h);
  const { frames, coeffs, values } = heat;
  if (!frames) return;
  // normalise each coefficient row on its own range
  const cw = w / frames, ch = h / coeffs;
  for (let k = 0; k < coeffs; k++) {
    let lo = Infinity, hi = -Infinity;
    for (let t = 0; t < frames; t++) {
      const v = values[t * coeffs + k];
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
    for (let t = 0; t < frames; t++) {
      const v = (values[t * coeffs + k] - lo) / (hi - lo || 1);
      g.fillStyle = `hsl(${240 - 240 * v}, 80%, ${25 + 40 * v}%)`;
      g.fillRect(t * cw, (coeffs - 1 - k) * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
}

function buildFretboard() {
  const table = $("fretboard");
  const head = table.insertRow();
  head.appendChild(document.createElement("th"));
  for (let fret = 0; fret <= 4; fret++) {
    const th = document.createElement("th");
    th.textContent = fret === 0 ? "open" : `fret ${fret}`;
    head.appendChild(th);
  }
  for (let string = 1; string <= 6; string++) {
    const row = table.insertRow();
    const th = document.createElement("th");
    th.textContent = `string ${string}`;
    row.appendChild(th);
    for (let fret = 0; fret <= 4; fret++) {
      const info = JSON.parse(note_info(string, fret));
      const cell = row.insertCell();
      cell.textContent = info.name;
      if (!info.covered) cell.className = "uncovered";
      cell.onclick = () => {
        table.querySelectorAll("td.active").forEach((c) => c.classList.remove("active"));
        cell.classList.add("active");
        $("note").textContent =
          `${info.name}: MIDI ${info.midi}, ${info.frequency.toFixed(2)} Hz` + (info.covered ? "" : " (not covered)");
        const samples = pluck(string, fret, 1.2, (Math.random() * 2 ** 32) >>> 0);
        drawWave($("wave"), samples);
        drawHeat($("heat"), JSON.parse(mfcc_heatmap(samples, sample_rate())));
        play(samples);
      };
    }
  }
}

function runAlign() {
  const string = Number($("string").value);
  const seed = Number($("seed").value) >>> 0;
  $("summary").textContent = "aligning…";
  // let the status paint before the synchronous work
  setTimeout(() => {
    try {
      const result = align_take(string, seed);
      const demo = JSON.parse(result.json());
      lastTake = result.samples();
      $("play").disabled = false;
      const marks = demo.notes.flatMap((n) => [
        { t: n.truth, color: "#06c", top: true },
        { t: n.predicted, color: "#c30", top: false },
      ]);
      drawWave($("aligned"), lastTake, marks);
      $("summary").textContent =
        `${demo.notes.length} notes, shift ${demo.shift_ms.toFixed(1)} ms, ` +
        `mean error ${demo.mean_error_ms.toFixed(1)} ms, max ${demo.max_error_ms.toFixed(1)} ms`;
      const table = $("errors");
      table.innerHTML = "<tr><th>note</th><th>truth (s)</th><th>aligned (s)</th><th>error (ms)</th></tr>";
      for (const n of demo.notes) {
        const row = table.insertRow();
        for (const v of [n.note, n.truth.toFixed(3), n.predicted.toFixed(3), n.error_ms.toFixed(1)]) {
          row.insertCell().textContent = v;
        }
      }
    } catch (e) {
      $("summary").textContent = `error: ${e.message ?? e}`;
    }
  }, 10);
}

async function main() {
  await init();
  $("status").textContent = "";
  buildFretboard();
  for (let s = 1; s <= 6; s++) $("string").add(new Option(`${s}`, s));
  $("align").onclick = runAlign;
  $("play").onclick = () => lastTake && play(lastTake);
}

main().catch((e) => {
  $("status").textContent = `failed to load: ${e}`;
});
