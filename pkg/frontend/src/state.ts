// Studio state: a plain immutable object plus pure transition helpers.
// Rendering derives everything from (session snapshot, local pin drafts),
// so replaying the same state always reproduces the same view.

import { decodeSceneMetadata } from "./api.js";
import type {
  CandidateDiagnostic,
  GenerateResponse,
  GroupSummary,
  MappingTargetJson,
  ResultJson,
  SessionSummary,
} from "./types.js";

export type Step = "upload" | "preprocess" | "edit";

export interface StudioError {
  code: string;
  message: string;
  dimension?: string;
}

export interface StudioState {
  step: Step;
  session: SessionSummary | null;
  results: ResultJson[];
  diagnostics: CandidateDiagnostic[];
  selectedResultId: string | null;
  /** staged pin edits, committed only by the Update button */
  pinDrafts: Record<string, MappingTargetJson | "unpin">;
  groupDrafts: GroupSummary[];
  legendVisible: boolean;
  hoverResultId: string | null;
  busy: boolean;
  error: StudioError | null;
}

export function initialState(): StudioState {
  return {
    step: "upload",
    session: null,
    results: [],
    diagnostics: [],
    selectedResultId: null,
    pinDrafts: {},
    groupDrafts: [],
    legendVisible: false,
    hoverResultId: null,
    busy: false,
    error: null,
  };
}

export function withSession(_state: StudioState, session: SessionSummary): StudioState {
  return {
    ...initialState(),
    step: "preprocess",
    session,
    groupDrafts: session.groups.length ? session.groups : session.proposed_groups,
  };
}

export function withResults(state: StudioState, response: GenerateResponse): StudioState {
  const session = state.session
    ? { ...state.session, revision: response.revision }
    : null;
  const selected =
    response.results.find((r) => r.result_id === state.selectedResultId) ??
    response.results[0] ?? null;
  return {
    ...state,
    step: "edit",
    session,
    results: response.results,
    diagnostics: response.diagnostics,
    selectedResultId: selected ? selected.result_id : null,
    pinDrafts: {},
    busy: false,
    error: null,
  };
}

export function selectResult(state: StudioState, resultId: string): StudioState {
  return { ...state, selectedResultId: resultId, legendVisible: false };
}

export function draftPin(state: StudioState, slotId: string,
                         target: MappingTargetJson | "unpin"): StudioState {
  return { ...state, pinDrafts: { ...state.pinDrafts, [slotId]: target } };
}

export function clearDraft(state: StudioState, slotId: string): StudioState {
  const drafts = { ...state.pinDrafts };
  delete drafts[slotId];
  return { ...state, pinDrafts: drafts };
}

export function toggleLegend(state: StudioState): StudioState {
  return { ...state, legendVisible: !state.legendVisible };
}

export function setHover(state: StudioState, resultId: string | null): StudioState {
  return { ...state, hoverResultId: resultId };
}

export function setBusy(state: StudioState, busy: boolean): StudioState {
  return { ...state, busy, error: busy ? null : state.error };
}

export function setError(state: StudioState, error: StudioError | null): StudioState {
  return { ...state, busy: false, error };
}

export function setStep(state: StudioState, step: Step): StudioState {
  return { ...state, step };
}

export function updateGroupDraft(state: StudioState,
                                 groups: GroupSummary[]): StudioState {
  return { ...state, groupDrafts: groups };
}

// ---------------------------------------------------------------------------
// view-model selectors

export const TYPE_ICONS: Record<string, string> = {
  numerical: "#",
  categorical: "▤",
  temporal: "◷",
  geospatial: "◉",
  group: "∑",
};

export function targetKey(target: MappingTargetJson): string {
  return target.kind === "none" ? "none" : `${target.kind}:${target.index}`;
}

export function parseTargetKey(key: string): MappingTargetJson {
  if (key === "none") return { kind: "none", index: 0 };
  const [kind, index] = key.split(":");
  return { kind: kind as "element" | "axis", index: Number(index) };
}

export function targetLabel(target: MappingTargetJson,
                            result: ResultJson | null): string {
  if (target.kind === "none") return "None";
  if (target.kind === "axis") return `Axis ${target.index}`;
  if (target.index === 0) return "Element 0 (whole image)";
  const label = result?.elements.find((e) => e.index === target.index)?.label;
  return label ? `Element ${target.index} (${label})` : `Element ${target.index}`;
}

export interface PanelVM {
  slotId: string;
  name: string;
  kind: "dimension" | "group";
  typeIcon: string;
  target: MappingTargetJson;
  targetLabel: string;
  channels: string[];
  pinned: boolean;
  draft: MappingTargetJson | "unpin" | null;
  options: { key: string; label: string }[];
  errorHere: boolean;
}

export function selectedResult(state: StudioState): ResultJson | null {
  return state.results.find((r) => r.result_id === state.selectedResultId) ?? null;
}

/** Per-slot edit panels, derived from the SVG metadata island so the view
 *  always matches what the rendered scene actually encodes. */
export function editPanels(state: StudioState): PanelVM[] {
  const result = selectedResult(state);
  const session = state.session;
  if (!result || !session) return [];
  const meta = decodeSceneMetadata(result.svg);
  const panels: PanelVM[] = [];
  meta.solution.slots.forEach((slot, i) => {
    const target = meta.solution.pairs[i];
    const channels = meta.assignments
      .filter((a) =>
        slot.kind === "group"
          ? a.group_id === slot.id
          : a.dimension_id === slot.id && a.group_id === null)
      .map((a) => a.channel);
    const options: { key: string; label: string }[] = [
      { key: "none", label: "None" },
      ...result.elements.map((e) => ({
        key: `element:${e.index}`,
        label: targetLabel({ kind: "element", index: e.index }, result),
      })),
    ];
    if (slot.kind === "dimension") {
      options.push({ key: "axis:1", label: "Axis 1" });
      options.push({ key: "axis:2", label: "Axis 2" });
    }
    panels.push({
      slotId: slot.id,
      name: slot.name,
      kind: slot.kind,
      typeIcon: TYPE_ICONS[slot.kind === "group" ? "group" : slot.data_type ?? "categorical"],
      target,
      targetLabel: targetLabel(target, result),
      channels: [...new Set(channels)],
      pinned: slot.id in (session.pins ?? {}),
      draft: state.pinDrafts[slot.id] ?? null,
      options,
      errorHere: state.error?.dimension === slot.id,
    });
  });
  return panels;
}

/** Pin edits the Update button will submit. */
export function pendingEdits(state: StudioState) {
  return Object.entries(state.pinDrafts).map(([dimension, target]) =>
    target === "unpin" ? { dimension, unpin: true } : { dimension, target });
}
