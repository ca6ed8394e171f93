// Hand-rolled API payloads mirroring the service wire format.

import type {
  GenerateResponse,
  ResultJson,
  SessionSummary,
} from "../src/types.js";

export function sessionFixture(): SessionSummary {
  return {
    session_id: "s1",
    revision: 1,
    seed: 7,
    topic: "burger",
    rows: 3,
    dimensions: [
      { id: "d0", name: "name", data_type: "categorical", importance: 0.0 },
      { id: "d1", name: "sugars", data_type: "numerical", importance: 1.0 },
      { id: "d2", name: "fat", data_type: "numerical", importance: 0.5 },
    ],
    groups: [],
    proposed_groups: [],
    pins: {},
    result_count: 0,
  };
}

const META = {
  topic: "burger",
  placement: "ordered",
  reward: 0.25,
  solution: {
    pairs: [
      { kind: "element", index: 1 },
      { kind: "none", index: 0 },
      { kind: "none", index: 0 },
    ],
    slots: [
      { id: "d1", name: "sugars", kind: "dimension", data_type: "numerical", importance: 1.0 },
      { id: "d2", name: "fat", kind: "dimension", data_type: "numerical", importance: 0.5 },
      { id: "d0", name: "name", kind: "dimension", data_type: "categorical", importance: 0.0 },
    ],
    reward: { r: 0.25 },
  },
  assignments: [
    {
      dimension_id: "d1",
      element_index: 1,
      channel: "size_height",
      group_id: null,
      member_index: null,
    },
  ],
};

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export function sceneSvg(): string {
  return (
    '<svg xmlns="http://www.w3.org/2000/svg" width="10" height="10">' +
    `<metadata id="mgv-mapping">${escapeXml(JSON.stringify(META))}</metadata>` +
    "<rect width=\"10\" height=\"10\" fill=\"#fff\"/></svg>"
  );
}

export function resultFixture(id = "r1"): ResultJson {
  return {
    result_id: id,
    candidate_id: "burger.svg",
    candidate_source: "local_corpus",
    reward: 0.25,
    reward_breakdown: { r: 0.25 },
    solution: META.solution as ResultJson["solution"],
    svg: sceneSvg(),
    legend: '<svg xmlns="http://www.w3.org/2000/svg"/>',
    elements: [
      { index: 0, label: "whole image", augmentable: false },
      { index: 1, label: "top-bun", augmentable: false },
      { index: 2, label: "lettuce", augmentable: false },
    ],
    element_svgs: ["<svg/>", "<svg/>", "<svg/>"],
    metaphor_svg: "<svg/>",
  };
}

export function generateFixture(): GenerateResponse {
  return {
    session_id: "s1",
    revision: 2,
    results: [resultFixture("r1"), resultFixture("r2")],
    diagnostics: [
      { candidate_id: "burger.svg", status: "ok", reason: null, reward: 0.25 },
    ],
  };
}
