import init, { Picture, CenterToy, downsampleFactor } from "./pkg/antithetic_web_demo.js";

const $ = (id) => document.getElementById(id);
const DISPLAY_HEIGHT = 320;
const PALETTE = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4",
                 "#f032e6", "#9a6324", "#469990", "#808000", "#000075", "#a9a9a9"];

let base = null;    // picture before extra blur
let current = null; // picture shown in the first panel

function paint(canvas, width, height, rgba) {
  canvas.width = width;
  canvas.height = height;
  canvas.style.height = `${DISPLAY_HEIGHT}px`;
  canvas.style.width = `${Math.round((DISPLAY_HEIGHT * width) / height)}px`;
  const data = new ImageData(new Uint8ClampedArray(rgba), width, height);
  canvas.getContext("2d").putImageData(data, 0, 0);
}

function replace(old, next) {
  if (old) old.free();
  return next;
}

function loadSynthetic() {
  base = replace(base, Picture.synthetic(
    Number($("identity").value), Number($("index").value), Number($("seed").value), $("degraded").checked));
  refresh();
}

function refresh() {
  if (!base) return;
  const sigma = Number($("sigma").value);
  $("sigma-out").textContent = sigma.toFixed(2);
  current = replace(current, sigma > 0 ? base.blurred(sigma) : Picture.fromRgba(base.width(), base.height(), base.rgba()));
  paint($("img"), current.width(), current.height(), current.rgba());
  paint($("spec"), current.width(), current.height(), current.spectrumRgba());
  $("score").textContent = current.sharpness().toFixed(4);
  refreshPair();
}

function refreshPair() {
  const seed = Number($("pair-seed").value);
  const down = current.downsampled(seed);
  const enh = current.enhanced();
  paint($("down"), down.width(), down.height(), down.rgba());
  paint($("enh"), enh.width(), enh.height(), enh.rgba());
  $("down-cap").textContent = `down-up, u = ${downsampleFactor(seed).toFixed(3)}: ${down.sharpness().toFixed(4)}`;
  $("enh-cap").textContent = `enhanced: ${enh.sharpness().toFixed(4)}`;
  down.free();
  enh.free();
}

function loadFile(file) {
  const img = new Image();
  img.onload = () => {
    // keep the spectrum affordable for large photos
    const scale = Math.min(1, 256 / Math.max(img.width, img.height));
    const w = Math.max(1, Math.round(img.width * scale));
    const h = Math.max(1, Math.round(img.height * scale));
    const c = document.createElement("canvas");
    c.width = w;
    c.height = h;
    const ctx = c.getContext("2d");
    ctx.drawImage(img, 0, 0, w, h);
    base = replace(base, Picture.fromRgba(w, h, ctx.getImageData(0, 0, w, h).data));
    URL.revokeObjectURL(img.src);
    refresh();
  };
  img.src = URL.createObjectURL(file);
}

// center repulsion toy
let toys = null;
let steps = 0;
let running = false;

function resetToys() {
  if (toys) toys.forEach((t) => t.free());
  const k = Number($("toy-k").value), n = Number($("toy-n").value), seed = Number($("toy-seed").value);
  toys = [new CenterToy(k, n, seed, false), new CenterToy(k, n, seed, true)];
  steps = 0;
  drawToys();
}

function drawToy(canvas, toy) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const feats = toy.features(), centers = toy.centers(), labels = toy.labels();
  const extent = Math.max(1.5, ...Array.from(feats, Math.abs)) * 1.1;
  const px = (x) => w / 2 + (x / extent) * (w / 2);
  const py = (y) => h / 2 - (y / extent) * (h / 2);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, w, h);
  ctx.strokeStyle = "#ddd";
  ctx.beginPath();
  ctx.moveTo(0, h / 2); ctx.lineTo(w, h / 2);
  ctx.moveTo(w / 2, 0); ctx.lineTo(w / 2, h);
  ctx.stroke();
  for (let i = 0; i < labels.length; i++) {
    ctx.fillStyle = PALETTE[labels[i] % PALETTE.length];
    ctx.beginPath();
    ctx.arc(px(feats[2 * i]), py(feats[2 * i + 1]), 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  // centers are drawn as rays since only their direction matters
  ctx.lineWidth = 2;
  for (let k = 0; k < centers.length / 2; k++) {
    const [x, y] = [centers[2 * k], centers[2 * k + 1]];
    const norm = Math.hypot(x, y) || 1;
    ctx.strokeStyle = PALETTE[k % PALETTE.length];
    ctx.beginPath();
    ctx.moveTo(px(0), py(0));
    ctx.lineTo(px((x / norm) * extent), py((y / norm) * extent));
    ctx.stroke();
  }
  ctx.lineWidth = 1;
}

function drawToys() {
  drawToy($("toy-center"), toys[0]);
  drawToy($("toy-ccl"), toys[1]);
  $("d-center").textContent = toys[0].dCenters().toFixed(4);
  $("d-ccl").textContent = toys[1].dCenters().toFixed(4);
  $("toy-step").textContent = steps;
}

function tick() {
  if (!running) return;
  const lr = Number($("toy-lr").value);
  for (let i = 0; i < 5; i++) toys.forEach((t) => t.step(lr));
  steps += 5;
  drawToys();
  requestAnimationFrame(tick);
}

await init();
["identity", "index", "seed", "degraded"].forEach((id) => $(id).addEventListener("change", loadSynthetic));
$("sigma").addEventListener("input", refresh);
$("pair-seed").addEventListener("change", refreshPair);
$("file").addEventListener("change", (e) => e.target.files[0] && loadFile(e.target.files[0]));
$("toy-run").addEventListener("click", () => {
  running = !running;
  $("toy-run").textContent = running ? "pause" : "run";
  if (running) requestAnimationFrame(tick);
});
$("toy-reset").addEventListener("click", resetToys);
["toy-k", "toy-n", "toy-seed"].forEach((id) => $(id).addEventListener("change", resetToys));
loadSynthetic();
resetToys();
