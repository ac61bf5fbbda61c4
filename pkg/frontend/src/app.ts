// Application shell: wires the API client, the viewport, and the SVG
// renderer into an interactive explorer. All state lives in one mutable
// record; every mutation funnels through refresh() so the scene can never
// disagree with the data it was drawn from.

import { ApiClient, ApiError, billHref } from "./api.js";
import { renderScene } from "./render.js";
import type { GraphResponse, LayoutSnapshot, SearchHit } from "./types.js";
import { fitBounds, pan, positionBounds, zoomAt, type Viewport } from "./viewport.js";

export interface AppState {
  client: ApiClient;
  view: string | null;
  response: GraphResponse | null;
  snapshot: LayoutSnapshot | null;
  viewport: Viewport;
  hovered: string | null;
  width: number;
  height: number;
}

export interface AppHandles {
  state: AppState;
  refresh: () => Promise<void>;
  svg: SVGSVGElement;
  status: HTMLElement;
  results: HTMLElement;
  runSearch: (query: string, mode: "keyword" | "semantic") => Promise<void>;
  toggleCluster: (clusterId: string) => Promise<void>;
  togglePin: (nodeId: string) => Promise<void>;
  applyTagFilter: (tag: string) => Promise<void>;
  clearFilter: () => Promise<void>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  return node;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return `server error ${err.status}: ${err.message}`;
  if (err instanceof Error) return err.message;
  return String(err);
}

function clusterCandidates(response: GraphResponse): string[] {
  const types = new Set<string>();
  for (const entity of response.graph.entities) {
    if (entity.style_hint?.shape === "diamond") continue;
    types.add(`type-${entity.entity_type}`);
  }
  for (const collapsed of response.collapsed) types.add(collapsed);
  return [...types].sort();
}

function renderHits(doc: Document, container: HTMLElement, hits: SearchHit[]): void {
  container.textContent = "";
  if (hits.length === 0) {
    const empty = el(doc, "p", "empty");
    empty.textContent = "no matches";
    container.appendChild(empty);
    return;
  }
  const list = el(doc, "ol", "hits");
  for (const hit of hits) {
    const item = el(doc, "li", "hit");
    const head = el(doc, "div", "hit-head");
    head.textContent = `${hit.target} (${hit.kind}, ${hit.score.toFixed(3)})`;
    item.appendChild(head);
    const snippet = el(doc, "div", "hit-snippet");
    snippet.textContent = hit.snippet;
    item.appendChild(snippet);
    if (hit.bill_ref) {
      const chip = el(doc, "a", "bill-chip");
      chip.textContent = `${hit.bill_ref.bill_id} p.${hit.bill_ref.page}`;
      chip.setAttribute("data-bill-id", hit.bill_ref.bill_id);
      chip.setAttribute("target", "_blank");
      item.appendChild(chip);
    }
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function initApp(root: HTMLElement, client: ApiClient): AppHandles {
  const doc = root.ownerDocument;
  const state: AppState = {
    client,
    view: null,
    response: null,
    snapshot: null,
    viewport: { scale: 1, offsetX: 0, offsetY: 0 },
    hovered: null,
    width: 960,
    height: 640,
  };

  root.textContent = "";
  const toolbar = el(doc, "div", "toolbar");
  const searchBox = el(doc, "input", "search-box");
  searchBox.type = "search";
  searchBox.placeholder = "search entities and bill text";
  const modeSelect = el(doc, "select", "search-mode");
  for (const mode of ["keyword", "semantic"]) {
    const opt = el(doc, "option");
    opt.value = mode;
    opt.textContent = mode;
    modeSelect.appendChild(opt);
  }
  const searchBtn = el(doc, "button", "search-run");
  searchBtn.textContent = "search";
  const filterBox = el(doc, "input", "filter-box");
  filterBox.type = "text";
  filterBox.placeholder = "filter by tag";
  const filterBtn = el(doc, "button", "filter-apply");
  filterBtn.textContent = "filter";
  const clearBtn = el(doc, "button", "filter-clear");
  clearBtn.textContent = "clear";
  const clusterBar = el(doc, "div", "cluster-bar");
  toolbar.appendChild(searchBox);
  toolbar.appendChild(modeSelect);
  toolbar.appendChild(searchBtn);
  toolbar.appendChild(filterBox);
  toolbar.appendChild(filterBtn);
  toolbar.appendChild(clearBtn);
  toolbar.appendChild(clusterBar);

  const stage = el(doc, "div", "stage");
  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg") as SVGSVGElement;
  svg.setAttribute("width", String(state.width));
  svg.setAttribute("height", String(state.height));
  svg.setAttribute("class", "canvas");
  stage.appendChild(svg);

  const side = el(doc, "div", "side");
  const status = el(doc, "div", "status");
  const results = el(doc, "div", "results");
  side.appendChild(status);
  side.appendChild(results);

  root.appendChild(toolbar);
  root.appendChild(stage);
  root.appendChild(side);

  function draw(): void {
    if (!state.response || !state.snapshot) return;
    renderScene(svg, state.response, state.snapshot, state.viewport, {
      hovered: state.hovered,
      callbacks: {
        onNodeEnter: (id) => {
          state.hovered = id;
          draw();
        },
        onNodeLeave: () => {
          state.hovered = null;
          draw();
        },
        onNodeClick: (id) => {
          void togglePin(id);
        },
      },
    });
  }

  function rebuildClusterBar(): void {
    if (!state.response) return;
    clusterBar.textContent = "";
    const collapsed = new Set(state.response.collapsed);
    for (const clusterId of clusterCandidates(state.response)) {
      const btn = el(doc, "button", "cluster-toggle");
      btn.setAttribute("data-cluster-id", clusterId);
      btn.textContent = `${collapsed.has(clusterId) ? "expand" : "collapse"} ${clusterId}`;
      btn.addEventListener("click", () => void toggleCluster(clusterId));
      clusterBar.appendChild(btn);
    }
  }

  async function refresh(): Promise<void> {
    try {
      const view = state.view ?? undefined;
      const { body } = await client.graph(view);
      const snapshot = await client.layout(view);
      state.response = body;
      state.snapshot = snapshot;
      const bounds = positionBounds(snapshot.positions);
      if (bounds) state.viewport = fitBounds(bounds, state.width, state.height);
      status.textContent =
        `${body.graph.entities.length} entities, ` +
        `${body.graph.relationships.length} relationships` +
        (body.hidden_edge_count ? ` (${body.hidden_edge_count} hidden)` : "");
      rebuildClusterBar();
      draw();
    } catch (err) {
      status.textContent = describeError(err);
    }
  }

  async function togglePin(nodeId: string): Promise<void> {
    if (!state.snapshot) return;
    try {
      if (state.snapshot.pinned.includes(nodeId)) {
        await client.unpin(nodeId);
      } else {
        await client.pin(nodeId);
      }
      await refresh();
    } catch (err) {
      status.textContent = describeError(err);
    }
  }

  async function toggleCluster(clusterId: string): Promise<void> {
    if (!state.response) return;
    try {
      if (state.response.collapsed.includes(clusterId)) {
        await client.expand(clusterId);
      } else {
        await client.collapse(clusterId);
      }
      await refresh();
    } catch (err) {
      status.textContent = describeError(err);
    }
  }

  async function applyTagFilter(tag: string): Promise<void> {
    const trimmed = tag.trim();
    if (!trimmed) return;
    try {
      const { view_id } = await client.createFilterView({ tags: [trimmed] });
      state.view = view_id;
      await refresh();
    } catch (err) {
      status.textContent = describeError(err);
    }
  }

  async function clearFilter(): Promise<void> {
    state.view = null;
    await refresh();
  }

  async function runSearch(query: string, mode: "keyword" | "semantic"): Promise<void> {
    if (!query.trim()) return;
    try {
      const hits = await client.search(query, mode);
      renderHits(doc, results, hits);
      for (const chip of results.querySelectorAll("a.bill-chip")) {
        const billId = chip.getAttribute("data-bill-id");
        if (!billId) continue;
        client
          .bill(billId)
          .then((bill) => chip.setAttribute("href", billHref(bill)))
          .catch(() => chip.removeAttribute("href"));
      }
    } catch (err) {
      status.textContent = describeError(err);
    }
  }

  searchBtn.addEventListener("click", () => {
    void runSearch(searchBox.value, modeSelect.value as "keyword" | "semantic");
  });
  searchBox.addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      void runSearch(searchBox.value, modeSelect.value as "keyword" | "semantic");
    }
  });
  filterBtn.addEventListener("click", () => void applyTagFilter(filterBox.value));
  clearBtn.addEventListener("click", () => void clearFilter());

  svg.addEventListener("wheel", (event) => {
    event.preventDefault();
    const factor = event.deltaY < 0 ? 1.15 : 1 / 1.15;
    state.viewport = zoomAt(state.viewport, factor, event.offsetX, event.offsetY);
    draw();
  });

  let dragging: { x: number; y: number } | null = null;
  svg.addEventListener("mousedown", (event) => {
    if ((event.target as Element).hasAttribute?.("data-node-id")) return;
    dragging = { x: event.clientX, y: event.clientY };
  });
  svg.addEventListener("mousemove", (event) => {
    if (!dragging) return;
    state.viewport = pan(state.viewport, event.clientX - dragging.x, event.clientY - dragging.y);
    dragging = { x: event.clientX, y: event.clientY };
    draw();
  });
  svg.addEventListener("mouseup", () => {
    dragging = null;
  });

  return {
    state,
    refresh,
    svg,
    status,
    results,
    runSearch,
    toggleCluster,
    togglePin,
    applyTagFilter,
    clearFilter,
  };
}

// Boot only when the host page provides the well-known mount point, so
// importing this module from tests has no side effects.
const mount = typeof document !== "undefined" ? document.getElementById("legiscout-root") : null;
if (mount) {
  const handles = initApp(mount, new ApiClient(""));
  void handles.refresh();
}
