import type { AppController } from "./controller";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const CHART_W = 360;
const CHART_H = 120;

import { polylinePoints } from "./chart";

export type Ui = { sync: () => void };

/** Builds the static page once; sync() patches it from controller state. */
export function buildUi(root: HTMLElement, ctl: AppController): Ui {
  root.replaceChildren();

  const manifestSpan = el("span", { class: "manifest", title: "checkpoint manifest hash" });
  const header = el("header");
  header.append(el("h1", {}, "style-vton"), manifestSpan);

  const banner = el("div", { class: "banner", hidden: "" });
  const bannerText = el("span");
  const retryBtn = el("button", {}, "Retry");
  retryBtn.addEventListener("click", () => void ctl.retry());
  banner.append(bannerText, retryBtn);

  const garmentList = el("div", { class: "garment-list" });
  const picker = el("section", { class: "picker" });
  picker.append(el("h2", {}, "Garments"), garmentList);

  const img = el("img", { class: "tryon", alt: "try-on result" });
  const imageHash = el("div", { class: "hash" });
  const viewer = el("section", { class: "viewer" });
  viewer.append(img, imageHash);

  const startBtn = el("button", {}, "Start editing");
  const regionsBox = el("div", { class: "regions" });
  const budget = el("input", { type: "range", min: "0", max: "4", step: "0.1", value: "2" });
  const budgetOut = el("span", {}, "2.0");
  const steps = el("input", { type: "number", min: "1", value: "5" });
  const stepSize = el("input", { type: "number", min: "0.05", step: "0.05", value: "0.5" });
  const stepBtn = el("button", {}, "Step");
  const resetBtn = el("button", {}, "Reset");
  const chart = document.createElementNS(SVG_NS, "svg");
  chart.setAttribute("viewBox", `0 0 ${CHART_W} ${CHART_H}`);
  chart.setAttribute("class", "chart");
  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "#2a7");
  line.setAttribute("stroke-width", "2");
  chart.append(line);
  const sessionInfo = el("div", { class: "session-info" });

  const editor = el("section", { class: "editor" });
  editor.append(
    el("h2", {}, "Style editor"),
    startBtn,
    regionsBox,
    labelled("budget", budget, budgetOut),
    labelled("steps", steps),
    labelled("step size", stepSize),
    stepBtn,
    resetBtn,
    chart,
    sessionInfo,
  );

  const main = el("div", { class: "columns" });
  main.append(picker, viewer, editor);
  root.append(header, banner, main);

  const checkedRegions = new Set<string>();
  let renderedVocabulary = "";
  let renderedCatalog = "";

  budget.addEventListener("input", () => {
    budgetOut.textContent = Number(budget.value).toFixed(1);
  });
  startBtn.addEventListener("click", () => void ctl.startEdit([]));
  stepBtn.addEventListener("click", () => {
    void ctl.step({
      regions: [...checkedRegions],
      steps: Math.max(1, Number(steps.value) || 5),
      stepSize: Number(stepSize.value) || 0.5,
      budget: Number(budget.value),
      components: ["shape", "texture"],
    });
  });
  resetBtn.addEventListener("click", () => void ctl.reset());

  function syncCatalog(): void {
    const key = ctl.state.catalog.map((g) => g.id).join(",") + `|${ctl.state.selectedGarmentId}`;
    if (key === renderedCatalog) return;
    renderedCatalog = key;
    garmentList.replaceChildren();
    if (ctl.pickerDisabled) {
      garmentList.append(
        el("p", { class: "empty" }, ctl.state.catalogLoaded ? "no garments available" : "loading..."),
      );
    }
    for (const g of ctl.state.catalog) {
      const btn = el("button", { class: "garment" }, `${g.id} (${g.texture_kind})`);
      if (g.id === ctl.state.selectedGarmentId) btn.classList.add("selected");
      btn.disabled = ctl.pickerDisabled;
      btn.addEventListener("click", () => void ctl.selectGarment(g.id));
      garmentList.append(btn);
    }
  }

  function syncRegions(): void {
    const sess = ctl.state.session;
    const vocab = sess ? sess.vocabulary.join(",") : "";
    if (vocab === renderedVocabulary) return;
    renderedVocabulary = vocab;
    regionsBox.replaceChildren();
    checkedRegions.clear();
    if (!sess) return;
    const preferred = sess.vocabulary.includes("torso-garment")
      ? "torso-garment"
      : sess.vocabulary[0];
    for (const region of sess.vocabulary) {
      const box = el("input", { type: "checkbox" });
      box.checked = region === preferred;
      if (box.checked) checkedRegions.add(region);
      box.addEventListener("change", () => {
        if (box.checked) checkedRegions.add(region);
        else checkedRegions.delete(region);
      });
      const wrap = el("label", { class: "region" });
      wrap.append(box, document.createTextNode(region));
      regionsBox.append(wrap);
    }
  }

  function sync(): void {
    manifestSpan.textContent = ctl.state.manifestHash ? `manifest ${ctl.state.manifestHash}` : "";
    banner.hidden = ctl.state.banner === null;
    bannerText.textContent = ctl.state.banner ? `service error: ${ctl.state.banner}` : "";

    syncCatalog();
    syncRegions();

    const image = ctl.currentImage;
    img.src = image ? `data:image/png;base64,${image}` : "";
    img.style.visibility = image ? "visible" : "hidden";
    imageHash.textContent = ctl.currentImageHash ? `sha256 ${ctl.currentImageHash}` : "";

    const sess = ctl.state.session;
    startBtn.disabled = ctl.state.selectedGarmentId === null && ctl.state.catalog.length === 0;
    stepBtn.disabled = sess === null;
    resetBtn.disabled = sess === null;
    line.setAttribute("points", sess ? polylinePoints(sess.scoreTrace, CHART_W, CHART_H) : "");
    if (sess) {
      const trace = sess.scoreTrace;
      sessionInfo.textContent =
        `session ${sess.sessionId} | score ${trace[0].toFixed(4)} -> ` +
        `${trace[trace.length - 1].toFixed(4)} over ${trace.length - 1} accepted steps | ` +
        `displacement ${sess.codeDeltaNorm.toFixed(4)} | golden ${sess.goldenHash.slice(0, 12)}`;
    } else {
      sessionInfo.textContent = "";
    }
    root.classList.toggle("busy", ctl.busy);
  }

  return { sync };
}

function labelled(text: string, ...controls: HTMLElement[]): HTMLElement {
  const wrap = el("label", { class: "field" });
  wrap.append(document.createTextNode(text), ...controls);
  return wrap;
}
