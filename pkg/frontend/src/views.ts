// Pure HTML-string views. No visualization logic lives here: scenes,
// legends, and thumbnails arrive as server-rendered SVG and are inlined.

import {
  editPanels,
  selectedResult,
  StudioState,
  targetKey,
} from "./state.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function menuView(state: StudioState): string {
  const steps: [string, string][] = [
    ["upload", "1. Upload"],
    ["preprocess", "2. Preprocess"],
    ["edit", "3. Edit"],
  ];
  const items = steps
    .map(([id, label]) => {
      const active = state.step === id ? " active" : "";
      const enabled = id === "upload" || state.session !== null;
      return `<button class="step${active}" data-action="goto-step" data-step="${id}" ${enabled ? "" : "disabled"}>${label}</button>`;
    })
    .join("");
  return `<nav class="menu">${items}</nav>`;
}

export function uploadView(state: StudioState): string {
  return `
  <section class="upload">
    <h2>Upload a spreadsheet</h2>
    <p>The file name becomes the dataset topic.</p>
    <input type="file" id="file-input" accept=".csv,.tsv,text/csv"/>
    <button data-action="upload" ${state.busy ? "disabled" : ""}>Upload</button>
  </section>`;
}

export function preprocessView(state: StudioState): string {
  const session = state.session;
  if (!session) return "";
  const dims = session.dimensions
    .map((d) => `<li><span class="type-icon">${esc(d.data_type[0].toUpperCase())}</span> ${esc(d.name)} <em>${esc(d.data_type)}</em></li>`)
    .join("");
  const groups = state.groupDrafts
    .map((g, i) => `
      <li class="group-row">
        <input value="${esc(g.name)}" data-action="group-name" data-group="${i}"/>
        <span>${g.members.map(esc).join(", ")}</span>
        <button data-action="group-remove" data-group="${i}">remove</button>
      </li>`)
    .join("");
  const proposals = session.proposed_groups.length
    ? `<p class="hint">Proposed from column-name similarity; accept, rename, or remove.</p>`
    : `<p class="hint">No groups proposed. Numerical columns with similar names group automatically.</p>`;
  return `
  <section class="preprocess">
    <h2>${esc(session.topic)} · ${session.rows} rows</h2>
    <h3>Dimensions</h3><ul class="dims">${dims}</ul>
    <h3>Data groups</h3>${proposals}<ul class="groups">${groups}</ul>
    <button data-action="apply-groups" ${state.busy ? "disabled" : ""}>Apply groups</button>
    <button data-action="generate" ${state.busy ? "disabled" : ""}>Generate</button>
  </section>`;
}

export function mgvView(state: StudioState): string {
  const result = selectedResult(state);
  if (!result) {
    const notes = state.diagnostics
      .map((d) => `<li>${esc(d.candidate_id)}: ${esc(d.reason ?? d.status)}</li>`)
      .join("");
    return `<section class="mgv empty"><p>No result yet.</p><ul>${notes}</ul></section>`;
  }
  const thumbs = result.elements
    .map((e, i) => `
      <figure class="element-thumb" title="${esc(e.label ?? `element ${e.index}`)}">
        ${result.element_svgs[i]}
        <figcaption>Element ${e.index}${e.index === 0 ? " (whole)" : ""}</figcaption>
      </figure>`)
    .join("");
  const legend = state.legendVisible
    ? `<div class="legend-overlay">${result.legend}</div>`
    : "";
  return `
  <section class="mgv">
    <aside class="elements">${thumbs}</aside>
    <div class="scene" data-result="${esc(result.result_id)}">
      ${result.svg}
      ${legend}
    </div>
    <div class="mgv-actions">
      <span class="reward">reward ${result.reward.toFixed(4)}</span>
      <button data-action="toggle-legend">${state.legendVisible ? "Hide legend" : "Legend"}</button>
      <button data-action="update" ${state.busy ? "disabled" : ""}>Update</button>
      <button data-action="export-svg">Export SVG</button>
      <button data-action="export-bundle">Export bundle</button>
    </div>
  </section>`;
}

export function editView(state: StudioState): string {
  const panels = editPanels(state);
  if (!panels.length) return "";
  const cards = panels
    .map((p) => {
      const options = p.options
        .map((o) => {
          const current = p.draft && p.draft !== "unpin" ? targetKey(p.draft) : targetKey(p.target);
          return `<option value="${o.key}" ${o.key === current ? "selected" : ""}>${esc(o.label)}</option>`;
        })
        .join("");
      const pinState = p.draft
        ? (p.draft === "unpin" ? "unpin staged" : "pin staged")
        : p.pinned ? "pinned" : "";
      const error = p.errorHere && state.error
        ? `<p class="panel-error">${esc(state.error.message)}</p>` : "";
      return `
      <article class="panel ${p.errorHere ? "panel-invalid" : ""}" data-slot="${esc(p.slotId)}">
        <header>
          <span class="type-icon">${p.typeIcon}</span>
          <strong>${esc(p.name)}</strong>
          <span class="pin-state">${pinState}</span>
        </header>
        <label>Mapped to
          <select data-action="panel-target" data-slot="${esc(p.slotId)}">${options}</select>
        </label>
        <p class="channel">${p.channels.length ? esc(p.channels.join(", ")) : "—"}</p>
        <div class="panel-buttons">
          <button data-action="panel-unpin" data-slot="${esc(p.slotId)}" ${p.pinned || p.draft ? "" : "disabled"}>unpin</button>
        </div>
        ${error}
      </article>`;
    })
    .join("");
  return `<section class="edit"><h3>Mappings</h3><div class="panels">${cards}</div></section>`;
}

export function galleryView(state: StudioState): string {
  if (!state.results.length) return "";
  const items = state.results
    .map((r) => {
      const active = r.result_id === state.selectedResultId ? " active" : "";
      const hover = r.result_id === state.hoverResultId
        ? `<div class="metaphor-preview">${r.metaphor_svg}<div class="mgv-mini">${r.svg}</div></div>`
        : "";
      return `
      <figure class="gallery-item${active}" data-action="select-result"
              data-result="${esc(r.result_id)}">
        ${r.svg}
        <figcaption>${esc(r.candidate_id)} · ${r.reward.toFixed(3)}</figcaption>
        ${hover}
      </figure>`;
    })
    .join("");
  return `<section class="gallery"><h3>Gallery</h3><div class="gallery-row">${items}</div></section>`;
}

export function errorBanner(state: StudioState): string {
  if (!state.error || state.error.dimension) return "";
  return `<div class="banner error">
    <strong>${esc(state.error.code)}</strong> ${esc(state.error.message)}
    <button data-action="retry">Retry</button>
  </div>`;
}

export function appView(state: StudioState): string {
  const body =
    state.step === "upload"
      ? uploadView(state)
      : state.step === "preprocess"
        ? preprocessView(state)
        : `${mgvView(state)}${editView(state)}${galleryView(state)}`;
  return `
  <div class="studio ${state.busy ? "busy" : ""}">
    ${menuView(state)}
    ${errorBanner(state)}
    ${body}
  </div>`;
}

export const STYLES = `
* { box-sizing: border-box; }
body { margin: 0; font-family: system-ui, sans-serif; background: #f4f5f7; color: #1d2733; }
.studio { max-width: 1280px; margin: 0 auto; padding: 16px; }
.menu { display: flex; gap: 8px; margin-bottom: 12px; }
.menu .step { padding: 8px 14px; border: 1px solid #c5ccd4; background: #fff; border-radius: 6px; cursor: pointer; }
.menu .step.active { background: #2d5da8; color: #fff; border-color: #2d5da8; }
.banner.error { background: #fbe6e6; border: 1px solid #d89090; padding: 8px 12px; border-radius: 6px; margin-bottom: 10px; }
.upload, .preprocess { background: #fff; padding: 18px; border-radius: 8px; }
.dims li, .groups li { margin: 4px 0; }
.mgv { display: grid; grid-template-columns: 140px 1fr; gap: 12px; background: #fff; padding: 12px; border-radius: 8px; }
.elements { display: flex; flex-direction: column; gap: 6px; overflow-y: auto; max-height: 560px; }
.element-thumb { margin: 0; text-align: center; font-size: 11px; border: 1px solid #e3e7ec; border-radius: 6px; padding: 4px; }
.element-thumb svg { width: 56px; height: 56px; }
.scene { position: relative; }
.scene > svg { width: 100%; height: auto; max-height: 560px; border: 1px solid #e3e7ec; border-radius: 6px; }
.legend-overlay { position: absolute; right: 8px; top: 8px; background: #ffffffee; border: 1px solid #d4dae1; border-radius: 6px; padding: 4px; }
.legend-overlay svg { max-width: 420px; height: auto; }
.mgv-actions { grid-column: 1 / span 2; display: flex; gap: 8px; align-items: center; }
.panels { display: grid; grid-template-columns: repeat(auto-fill, minmax(240px, 1fr)); gap: 10px; }
.panel { background: #fff; border: 1px solid #e0e4ea; border-radius: 8px; padding: 10px; }
.panel-invalid { border-color: #cd5c5c; }
.panel-error { color: #a33; font-size: 12px; }
.pin-state { font-size: 11px; color: #2d5da8; margin-left: auto; }
.panel header { display: flex; gap: 6px; align-items: baseline; }
.type-icon { font-family: monospace; background: #eef1f5; border-radius: 4px; padding: 0 5px; }
.gallery-row { display: flex; gap: 10px; overflow-x: auto; }
.gallery-item { position: relative; margin: 0; width: 180px; cursor: pointer; border: 2px solid transparent; border-radius: 6px; }
.gallery-item.active { border-color: #2d5da8; }
.gallery-item > svg { width: 100%; height: auto; }
.metaphor-preview { position: absolute; left: 0; top: -10px; transform: translateY(-100%); background: #fff; border: 1px solid #c5ccd4; border-radius: 6px; padding: 6px; display: flex; gap: 6px; z-index: 5; }
.metaphor-preview svg { width: 120px; height: 120px; }
.busy { opacity: 0.7; pointer-events: none; }
button { cursor: pointer; }
`;
