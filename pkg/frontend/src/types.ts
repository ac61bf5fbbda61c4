// Payload shapes for the graph API. These mirror the server's JSON schemas;
// the client treats them as read-only data.

export interface BillRef {
  bill_id: string;
  document_id: string;
  page: number;
}

export interface StyleHint {
  shape: "circle" | "square" | "diamond";
  size_class: "small" | "medium" | "large";
  color_class: string;
}

export interface EntityDto {
  id: string;
  name: string;
  entity_type: string;
  role_description: string;
  tags: string[];
  bill_refs: BillRef[];
  style_hint: StyleHint | null;
}

export type LineStyle = "solid" | "dashed" | "dotted";

export interface RelationshipDto {
  id: string;
  source: string;
  target: string;
  rel_type: string;
  directed: boolean;
  weight: number;
  metadata: Record<string, string>;
  line_style: LineStyle;
}

export interface GraphDto {
  meta: Record<string, string>;
  entities: EntityDto[];
  relationships: RelationshipDto[];
}

export interface GraphResponse {
  view_id: string;
  graph: GraphDto;
  supernode_map: Record<string, string[]>;
  collapsed: string[];
  hidden_edge_count: number;
}

export interface LayoutSnapshot {
  iteration: number;
  converged: boolean;
  positions: Record<string, [number, number]>;
  pinned: string[];
}

export interface ClusterResponse {
  graph: GraphResponse;
  snapshot: LayoutSnapshot;
}

export interface SearchHit {
  target: string;
  score: number;
  kind: "keyword_entity" | "semantic_chunk";
  snippet: string | null;
  match_span: [number, number] | null;
  bill_ref: BillRef | null;
  linked_entities: string[];
}

export interface BillResponse {
  uri: string;
  page: number;
}

export interface FilterResponse {
  view_id: string;
}

export interface FilterSpecDto {
  entity_types?: string[];
  rel_types?: string[];
  tags?: string[];
}
