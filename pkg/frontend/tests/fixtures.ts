// Small graph response and layout snapshot used across the test files.
// Shapes, line styles, and sizes are chosen so every rendering branch is
// exercised at least once.

import type {
  EntityDto,
  GraphResponse,
  LayoutSnapshot,
  RelationshipDto,
  SearchHit,
} from "../src/types.js";

export function entity(id: string, overrides: Partial<EntityDto> = {}): EntityDto {
  return {
    id,
    name: id.toUpperCase(),
    entity_type: "agency",
    role_description: `${id} role`,
    tags: [],
    bill_refs: [],
    style_hint: { shape: "circle", size_class: "medium", color_class: "agency" },
    ...overrides,
  };
}

export function relationship(
  id: string,
  source: string,
  target: string,
  overrides: Partial<RelationshipDto> = {},
): RelationshipDto {
  return {
    id,
    source,
    target,
    rel_type: "oversees",
    directed: true,
    weight: 1.0,
    metadata: {},
    line_style: "solid",
    ...overrides,
  };
}

export function graphResponse(): GraphResponse {
  return {
    view_id: "default",
    graph: {
      meta: { schema: "log-v1" },
      entities: [
        entity("alpha"),
        entity("beta", {
          entity_type: "program",
          style_hint: { shape: "square", size_class: "small", color_class: "program" },
        }),
        entity("gamma", {
          entity_type: "supergroup",
          style_hint: { shape: "diamond", size_class: "large", color_class: "cluster" },
        }),
        entity("delta", { entity_type: "program" }),
      ],
      relationships: [
        relationship("r1", "alpha", "beta"),
        relationship("r2", "beta", "gamma", { line_style: "dashed", weight: 2.0 }),
        relationship("r3", "alpha", "gamma", { line_style: "dotted" }),
      ],
    },
    supernode_map: {},
    collapsed: [],
    hidden_edge_count: 0,
  };
}

export function snapshot(): LayoutSnapshot {
  return {
    iteration: 120,
    converged: true,
    positions: {
      alpha: [0, 0],
      beta: [10, 0],
      gamma: [0, 10],
      delta: [10, 10],
    },
    pinned: ["beta"],
  };
}

export function keywordHit(): SearchHit {
  return {
    target: "alpha",
    score: 2.5,
    kind: "keyword_entity",
    snippet: "ALPHA oversees the exchange program",
    match_span: [0, 5],
    bill_ref: { bill_id: "hr3590", document_id: "aca", page: 42 },
    linked_entities: ["alpha"],
  };
}
