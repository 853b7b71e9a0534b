import init, { Simulation, knn_cost, label_relaxation } from "./pkg/topoflock_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

let sim = null;
let running = true;

function resetSim() {
  try {
    sim = new Simulation(num("sim-n"), num("sim-rho"), num("sim-qfl"), num("sim-qlf"), BigInt(num("sim-seed")));
  } catch (e) {
    sim = null;
    $("sim-status").textContent = `error: ${e}`;
  }
}

function drawSim() {
  const canvas = $("sim-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pos = sim.positions();
  const labels = sim.labels();
  let cx = 0, cy = 0;
  for (let i = 0; i < labels.length; i++) {
    cx += pos[2 * i];
    cy += pos[2 * i + 1];
  }
  cx /= labels.length;
  cy /= labels.length;
  const scale = canvas.width / 400;
  for (let i = 0; i < labels.length; i++) {
    const x = (pos[2 * i] - cx) * scale + canvas.width / 2;
    const y = canvas.height / 2 - (pos[2 * i + 1] - cy) * scale;
    ctx.fillStyle = labels[i] ? "#d62728" : "#1f77b4";
    ctx.fillRect(x - 1.5, y - 1.5, 3, 3);
  }
}

function frame() {
  if (sim && running) {
    try {
      sim.step(10);
      drawSim();
      $("sim-status").textContent =
        `t = ${sim.time().toFixed(2)}  leaders = ${(100 * sim.leader_fraction()).toFixed(2)}%  clusters(50) = ${sim.clusters(50)}`;
    } catch (e) {
      running = false;
      $("sim-status").textContent = `error: ${e}`;
    }
  }
  requestAnimationFrame(frame);
}

function runCost() {
  try {
    const [ex, tree, k, nSub] = knn_cost(num("cost-n"), num("cost-rho"), num("cost-p"), 0n);
    $("cost-out").textContent =
      `exhaustive ${ex.toLocaleString()} | tree (N_c = ${nSub}, k = ${k}) ${tree.toLocaleString()} | ratio ${(ex / tree).toFixed(1)}x`;
  } catch (e) {
    $("cost-out").textContent = `error: ${e}`;
  }
}

function runRelaxation() {
  const canvas = $("rel-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  let rows;
  try {
    rows = label_relaxation(num("rel-n"), num("rel-qfl"), num("rel-qlf"), 1.0, num("rel-steps"), 0n);
  } catch (e) {
    $("rel-out").textContent = `error: ${e}`;
    return;
  }
  const n = rows.length / 3;
  const tMax = rows[3 * (n - 1)];
  let yMax = 0;
  for (let i = 0; i < n; i++) yMax = Math.max(yMax, rows[3 * i + 1], rows[3 * i + 2]);
  yMax = yMax * 1.1 || 1;
  const px = (t) => (t / tMax) * canvas.width;
  const py = (y) => canvas.height - (y / yMax) * canvas.height;
  for (const [col, colour] of [[1, "#1f77b4"], [2, "#d62728"]]) {
    ctx.strokeStyle = colour;
    ctx.beginPath();
    for (let i = 0; i < n; i++) {
      const x = px(rows[3 * i]);
      const y = py(rows[3 * i + col]);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
  }
  const last = 3 * (n - 1);
  $("rel-out").textContent =
    `final: simulated ${rows[last + 1].toFixed(4)}, rate equation ${rows[last + 2].toFixed(4)} (blue simulated, red rate equation)`;
}

await init();
$("sim-reset").onclick = resetSim;
$("sim-toggle").onclick = () => {
  running = !running;
  $("sim-toggle").textContent = running ? "Pause" : "Resume";
};
$("cost-run").onclick = runCost;
$("rel-run").onclick = runRelaxation;
resetSim();
requestAnimationFrame(frame);
