// Browser bootstrap: owns the state, talks to the service, re-renders.

import { StudioClient, ServiceError } from "./api.js";
import {
  draftPin,
  initialState,
  parseTargetKey,
  pendingEdits,
  selectResult,
  setBusy,
  setError,
  setHover,
  setStep,
  StudioState,
  toggleLegend,
  updateGroupDraft,
  withResults,
  withSession,
} from "./state.js";
import { appView, STYLES } from "./views.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8008";

const client = new StudioClient(SERVICE_URL);
let state: StudioState = initialState();
const root = document.getElementById("app")!;

function render() {
  root.innerHTML = appView(state);
}

function set(next: StudioState) {
  state = next;
  render();
}

function fail(err: unknown) {
  if (err instanceof ServiceError) {
    const detail = err.detail as { dimension?: string } | null;
    set(setError(state, {
      code: err.code,
      message: err.message,
      dimension: err.code === "unsatisfiable_pin" ? pinErrorSlot(err.message) : detail?.dimension,
    }));
  } else {
    set(setError(state, { code: "network", message: String(err) }));
  }
}

function pinErrorSlot(message: string): string | undefined {
  const match = message.match(/\b([dg]\d+)\b/);
  return match ? match[1] : undefined;
}

async function doUpload() {
  const input = document.getElementById("file-input") as HTMLInputElement | null;
  const file = input?.files?.[0];
  if (!file) return;
  set(setBusy(state, true));
  try {
    const session = await client.createSession(file, file.name);
    set(withSession(state, session));
  } catch (err) {
    fail(err);
  }
}

async function doApplyGroups() {
  if (!state.session) return;
  set(setBusy(state, true));
  try {
    const session = await client.setGroups(
      state.session.session_id,
      state.session.revision,
      state.groupDrafts.map((g) => ({ name: g.name, members: g.members })),
    );
    set(withSession({ ...state, session }, session));
  } catch (err) {
    fail(err);
  }
}

async function doGenerate() {
  if (!state.session) return;
  set(setBusy(state, true));
  try {
    const response = await client.generate(
      state.session.session_id, state.session.revision);
    set(withResults(state, response));
  } catch (err) {
    fail(err);
  }
}

async function doUpdate() {
  if (!state.session) return;
  const edits = pendingEdits(state);
  if (!edits.length) return doGenerate();
  set(setBusy(state, true));
  try {
    const response = await client.patchMappings(
      state.session.session_id, state.session.revision, edits);
    const refreshed = await client.getSession(state.session.session_id);
    set(withResults({ ...state, session: refreshed }, response));
  } catch (err) {
    fail(err);
  }
}

async function doExport(format: "svg" | "bundle") {
  if (!state.session || !state.selectedResultId) return;
  const url = client.exportUrl(state.session.session_id, state.selectedResultId, format);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = format === "svg" ? "mgv.svg" : "mgv-bundle.zip";
  anchor.click();
}

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!target) return;
  const action = target.dataset.action!;
  if (action === "upload") void doUpload();
  else if (action === "generate") void doGenerate();
  else if (action === "apply-groups") void doApplyGroups();
  else if (action === "update") void doUpdate();
  else if (action === "retry") set(setError(state, null));
  else if (action === "toggle-legend") set(toggleLegend(state));
  else if (action === "goto-step") set(setStep(state, target.dataset.step as StudioState["step"]));
  else if (action === "select-result") set(selectResult(state, target.dataset.result!));
  else if (action === "export-svg") void doExport("svg");
  else if (action === "export-bundle") void doExport("bundle");
  else if (action === "panel-unpin") set(draftPin(state, target.dataset.slot!, "unpin"));
  else if (action === "group-remove") {
    const index = Number(target.dataset.group);
    set(updateGroupDraft(state, state.groupDrafts.filter((_, i) => i !== index)));
  }
});

root.addEventListener("change", (event) => {
  const target = event.target as HTMLElement;
  if (target.matches("select[data-action='panel-target']")) {
    const select = target as HTMLSelectElement;
    set(draftPin(state, select.dataset.slot!, parseTargetKey(select.value)));
  } else if (target.matches("input[data-action='group-name']")) {
    const input = target as HTMLInputElement;
    const index = Number(input.dataset.group);
    const groups = state.groupDrafts.map((g, i) =>
      i === index ? { ...g, name: input.value } : g);
    set(updateGroupDraft(state, groups));
  }
});

root.addEventListener("mouseover", (event) => {
  const item = (event.target as HTMLElement).closest<HTMLElement>(".gallery-item");
  if (item && item.dataset.result !== state.hoverResultId) {
    set(setHover(state, item.dataset.result ?? null));
  }
});

root.addEventListener("mouseout", (event) => {
  const item = (event.target as HTMLElement).closest<HTMLElement>(".gallery-item");
  if (item && !item.contains(event.relatedTarget as Node)) {
    set(setHover(state, null));
  }
});

const style = document.createElement("style");
style.textContent = STYLES;
document.head.appendChild(style);
render();
