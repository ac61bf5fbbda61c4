// SVG renderer for the network view. Rebuilds the scene from the current
// graph body and layout snapshot on every call; at the graph sizes this
// client targets, full rebuilds are cheaper than diffing and can never
// drift out of sync.

import { buildAdjacency, highlightSet, incidentEdges } from "./neighbors.js";
import type { Viewport } from "./viewport.js";
import { worldToScreen } from "./viewport.js";
import type { EntityDto, GraphResponse, LayoutSnapshot, LineStyle } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export const DASH_BY_STYLE: Record<LineStyle, string> = {
  solid: "",
  dashed: "8 5",
  dotted: "2 4",
};

const RADIUS_BY_SIZE: Record<string, number> = {
  small: 6,
  medium: 8,
  large: 11,
};

const FILL_BY_COLOR: Record<string, string> = {
  agency: "#3d6fb4",
  program: "#2e8b57",
  people: "#b4683d",
  study: "#7d5ba6",
  cluster: "#888888",
  default: "#5b7fa6",
};

export interface RenderCallbacks {
  onNodeEnter?: (nodeId: string) => void;
  onNodeLeave?: (nodeId: string) => void;
  onNodeClick?: (nodeId: string, event: MouseEvent) => void;
}

export interface RenderOptions {
  hovered?: string | null;
  callbacks?: RenderCallbacks;
}

function make(doc: Document, tag: string): SVGElement {
  return doc.createElementNS(SVG_NS, tag) as SVGElement;
}

function nodeRadius(entity: EntityDto): number {
  return RADIUS_BY_SIZE[entity.style_hint?.size_class ?? "medium"] ?? 8;
}

function nodeFill(entity: EntityDto): string {
  const color = entity.style_hint?.color_class ?? "default";
  return FILL_BY_COLOR[color] ?? FILL_BY_COLOR["default"]!;
}

function shapeFor(doc: Document, entity: EntityDto, x: number, y: number): SVGElement {
  const r = nodeRadius(entity);
  switch (entity.style_hint?.shape) {
    case "square": {
      const rect = make(doc, "rect");
      rect.setAttribute("x", String(x - r));
      rect.setAttribute("y", String(y - r));
      rect.setAttribute("width", String(2 * r));
      rect.setAttribute("height", String(2 * r));
      return rect;
    }
    case "diamond": {
      const poly = make(doc, "polygon");
      const pts = [
        [x, y - r * 1.3],
        [x + r * 1.3, y],
        [x, y + r * 1.3],
        [x - r * 1.3, y],
      ];
      poly.setAttribute("points", pts.map(([px, py]) => `${px},${py}`).join(" "));
      return poly;
    }
    default: {
      const circle = make(doc, "circle");
      circle.setAttribute("cx", String(x));
      circle.setAttribute("cy", String(y));
      circle.setAttribute("r", String(r));
      return circle;
    }
  }
}

/** Rebuild the scene inside `svg`. Returns the number of drawn edges/nodes. */
export function renderScene(
  svg: SVGSVGElement,
  response: GraphResponse,
  snapshot: LayoutSnapshot,
  vp: Viewport,
  options: RenderOptions = {},
): { nodes: number; edges: number } {
  const doc = svg.ownerDocument;
  const { graph } = response;
  const hovered = options.hovered ?? null;
  const adjacency = buildAdjacency(graph);
  const lit = hovered ? highlightSet(adjacency, hovered) : null;
  const litEdges = hovered ? incidentEdges(graph.relationships, hovered) : null;
  const pinned = new Set(snapshot.pinned);

  while (svg.firstChild) svg.removeChild(svg.firstChild);
  const edgeGroup = make(doc, "g");
  edgeGroup.setAttribute("class", "edges");
  const nodeGroup = make(doc, "g");
  nodeGroup.setAttribute("class", "nodes");
  const labelGroup = make(doc, "g");
  labelGroup.setAttribute("class", "labels");
  svg.appendChild(edgeGroup);
  svg.appendChild(nodeGroup);
  svg.appendChild(labelGroup);

  let edges = 0;
  for (const rel of graph.relationships) {
    const from = snapshot.positions[rel.source];
    const to = snapshot.positions[rel.target];
    if (!from || !to) continue;
    const [x1, y1] = worldToScreen(vp, from[0], from[1]);
    const [x2, y2] = worldToScreen(vp, to[0], to[1]);
    const line = make(doc, "line");
    line.setAttribute("x1", String(x1));
    line.setAttribute("y1", String(y1));
    line.setAttribute("x2", String(x2));
    line.setAttribute("y2", String(y2));
    line.setAttribute("data-edge-id", rel.id);
    line.setAttribute("data-line-style", rel.line_style);
    const dash = DASH_BY_STYLE[rel.line_style];
    if (dash) line.setAttribute("stroke-dasharray", dash);
    line.setAttribute("stroke-width", String(1 + 0.5 * rel.weight));
    let cls = "edge";
    if (litEdges) cls += litEdges.has(rel.id) ? " lit" : " dimmed";
    line.setAttribute("class", cls);
    edgeGroup.appendChild(line);
    edges += 1;
  }

  let nodes = 0;
  for (const entity of graph.entities) {
    const pos = snapshot.positions[entity.id];
    if (!pos) continue;
    const [x, y] = worldToScreen(vp, pos[0], pos[1]);
    const shape = shapeFor(doc, entity, x, y);
    shape.setAttribute("data-node-id", entity.id);
    shape.setAttribute("fill", nodeFill(entity));
    let cls = "node";
    if (pinned.has(entity.id)) cls += " pinned";
    if (lit) cls += lit.has(entity.id) ? " lit" : " dimmed";
    shape.setAttribute("class", cls);
    const title = make(doc, "title");
    title.textContent = entity.role_description || entity.name;
    shape.appendChild(title);
    const callbacks = options.callbacks ?? {};
    if (callbacks.onNodeEnter) {
      shape.addEventListener("mouseenter", () => callbacks.onNodeEnter!(entity.id));
    }
    if (callbacks.onNodeLeave) {
      shape.addEventListener("mouseleave", () => callbacks.onNodeLeave!(entity.id));
    }
    if (callbacks.onNodeClick) {
      shape.addEventListener("click", (event) =>
        callbacks.onNodeClick!(entity.id, event as MouseEvent),
      );
    }
    nodeGroup.appendChild(shape);
    nodes += 1;

    const label = make(doc, "text");
    label.setAttribute("x", String(x));
    label.setAttribute("y", String(y + nodeRadius(entity) + 12));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("data-label-for", entity.id);
    let labelCls = "label";
    if (lit) labelCls += lit.has(entity.id) ? " lit" : " dimmed";
    label.setAttribute("class", labelCls);
    label.textContent = entity.name;
    labelGroup.appendChild(label);
  }

  return { nodes, edges };
}
