import init, { solveProgram, mergeInfo, spineTree } from "./pkg/fifth_wasm.js";

const examples = {
  queens: queens(6),
  fact: `; r = n!
(def (fact n r)
  (const zero 0)
  (const one 1)
  (cell base)
  (is-eq base n zero)
  (if base
    ((equal r one))
    ((cell m) (cell sub)
     (sum m one n)
     (call fact m sub)
     (product n sub r))))
(query (fact (n 10)) (show r))
`,
  line: `(def (plan total neg)
  (const t0 0) (const s0 0) (const acc0 0) (const minus1 -1)
  (call step t0 s0 acc0 total)
  (product total minus1 neg))
(def (step t s acc total)
  (const one 1) (const last 3) (const goal 3)
  (const bonus 10) (const nothing 0) (const cost -1)
  (choose a -1 1)
  (cell s2) (sum s a s2)
  (cell hit) (is-eq hit s2 goal)
  (cell gain) (switch hit bonus nothing gain)
  (cell r) (sum cost gain r)
  (cell acc2) (sum acc r acc2)
  (cell t2) (sum t one t2)
  (cell more) (is-le more t2 last)
  (if more
    ((call step t2 s2 acc2 total))
    ((equal total acc2))))
(query (plan) (show total) (minimize neg))
`,
  sum: `(def (pair x y)
  (choose x 0 1 2 3 4 5 6 7 8 9 10)
  (choose y 0 1 2 3 4 5 6 7 8 9 10)
  (const ten 10)
  (sum x y ten)
  (lesseq x y))
(query (pair) (show x y))
`,
};

function queens(n) {
  const rows = [...Array(n).keys()].map((i) => i + 1);
  const qs = rows.map((r) => `q${r}`).join(" ");
  let out = `(def (queens ${qs})\n`;
  for (const r of rows) {
    out += `  (choose q${r} ${rows.join(" ")})\n`;
    out += `  (const r${r} ${r}) (cell u${r}) (sum q${r} r${r} u${r}) (cell v${r}) (sum v${r} r${r} q${r})\n`;
  }
  out += `  (alldiff ${qs})\n  (alldiff ${rows.map((r) => `u${r}`).join(" ")})\n`;
  out += `  (alldiff ${rows.map((r) => `v${r}`).join(" ")}))\n`;
  return out + `(query (queens) (show ${qs}))\n`;
}

const $ = (id) => document.getElementById(id);

function showSolutions(result) {
  const table = $("solutions");
  table.replaceChildren();
  const status = $("solve-status");
  status.classList.toggle("error", !!result.error);
  if (result.error) {
    status.textContent = result.error;
    return;
  }
  const s = result.stats;
  let text = `${result.solutions.length} solution(s), ${s.nodes} nodes, ${s.steps} propagator steps, ${s.expansions} expansions`;
  text += s.complete ? ", search complete" : ", budget ran out";
  if ("optimal" in result) text += result.optimal ? ", optimum proven" : ", optimum not proven";
  status.textContent = text;
  const shown = result.solutions.slice(0, 100);
  if (!shown.length) return;
  const names = Object.keys(shown[0].cells);
  const head = table.insertRow();
  for (const n of names) head.appendChild(Object.assign(document.createElement("th"), { textContent: n }));
  for (const sol of shown) {
    const row = table.insertRow();
    for (const n of names) row.insertCell().textContent = sol.cells[n];
  }
}

function showMerge() {
  const r = JSON.parse(mergeInfo($("info-a").value, $("info-b").value));
  const out = $("merge-out");
  out.classList.toggle("error", !!r.error);
  if (r.error) {
    out.textContent = r.error;
    return;
  }
  let relation = "incomparable";
  if (r.a_below_b && r.b_below_a) relation = "equal information";
  else if (r.a_below_b) relation = "a ⊑ b";
  else if (r.b_below_a) relation = "b ⊑ a";
  out.textContent = `${r.a} ⊔ ${r.b} = ${r.merged}   (${relation}${r.contradiction ? ", contradiction" : ""})`;
}

function drawSpine(node, svg, depthOf, leaves) {
  const width = svg.clientWidth || 800;
  const x = (n) => ((n.first + n.last + 1) / 2 / leaves) * width;
  const y = (d) => 12 + d * 18;
  const ns = "http://www.w3.org/2000/svg";
  const walk = (n, d) => {
    for (const c of n.children) {
      const line = document.createElementNS(ns, "line");
      Object.entries({ x1: x(n), y1: y(d), x2: x(c), y2: y(d + 1), stroke: "#88a" }).forEach(([k, v]) => line.setAttribute(k, v));
      svg.appendChild(line);
      walk(c, d + 1);
    }
    const dot = document.createElementNS(ns, "circle");
    Object.entries({ cx: x(n), cy: y(d), r: n.children.length ? 3 : 1.5, fill: "#1d2430" }).forEach(([k, v]) => dot.setAttribute(k, v));
    svg.appendChild(dot);
  };
  walk(node, 0);
}

function showSpine() {
  const depth = Number($("depth").value);
  $("depth-label").textContent = depth;
  const r = JSON.parse(spineTree(depth));
  const svg = $("spine-svg");
  svg.replaceChildren();
  if (r.error) {
    $("spine-out").textContent = r.error;
    return;
  }
  $("spine-out").textContent =
    `${r.frame_count} frames, ${r.expansions} expansions, result ${r.result}; ` +
    `deepest frame reaches the root in ${r.spine.hops} bridge hops (bound ${r.bound}), tree height ${r.spine.height}`;
  if (r.spine.shape) drawSpine(r.spine.shape, svg, 0, r.spine.length);
}

await init();
$("program").value = examples.queens;
$("example").addEventListener("change", (e) => ($("program").value = examples[e.target.value]));
$("run").addEventListener("click", () => showSolutions(JSON.parse(solveProgram($("program").value, Number($("nodes").value)))));
$("merge-run").addEventListener("click", showMerge);
$("depth").addEventListener("input", showSpine);
showMerge();
showSpine();
