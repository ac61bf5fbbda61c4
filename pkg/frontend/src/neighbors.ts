// Adjacency helpers. Hover highlighting shows a node together with every
// neighbor connected in either direction, matching the API's notion of
// adjacency regardless of edge direction.

import type { GraphDto, RelationshipDto } from "./types.js";

export type Adjacency = Map<string, Set<string>>;

export function buildAdjacency(graph: GraphDto): Adjacency {
  const adjacency: Adjacency = new Map();
  for (const entity of graph.entities) adjacency.set(entity.id, new Set());
  for (const rel of graph.relationships) {
    adjacency.get(rel.source)?.add(rel.target);
    adjacency.get(rel.target)?.add(rel.source);
  }
  return adjacency;
}

/** The hovered node plus its neighbors in both directions. */
export function highlightSet(adjacency: Adjacency, nodeId: string): Set<string> {
  const out = new Set<string>([nodeId]);
  for (const neighbor of adjacency.get(nodeId) ?? []) out.add(neighbor);
  return out;
}

/** Edge ids incident to the node; hovering lights these up too. */
export function incidentEdges(relationships: RelationshipDto[], nodeId: string): Set<string> {
  const out = new Set<string>();
  for (const rel of relationships) {
    if (rel.source === nodeId || rel.target === nodeId) out.add(rel.id);
  }
  return out;
}
