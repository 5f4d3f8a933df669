/**
 * Live tree display model: a flat, indented row list mirroring the serialized
 * tree, colored by the latest tick statuses. Rendering targets are thin (any
 * list container works), so the model itself is what tests exercise.
 */

import { BtNodeJson } from "./protocol.js";

export type NodeStatus = "Success" | "Failure" | "Running" | "Idle";

export interface BtRow {
  id: string;
  depth: number;
  label: string;
  kind: BtNodeJson["kind"];
  status: NodeStatus;
}

const STATUS_COLORS: Record<NodeStatus, string> = {
  Success: "#2e9e44",
  Failure: "#c43c3c",
  Running: "#d9a514",
  Idle: "#9a9a9a",
};

export function nodeLabel(node: BtNodeJson): string {
  if (node.kind === "ActionLeaf") return `Action ${node.action}`;
  if (node.kind === "ConditionLeaf" && node.condition) {
    const c = node.condition;
    const short =
      c.variable === "Gripper" ? "g" : c.variable === "Object" ? "o" : "e";
    const expected = c.expected === "NotNear" ? "!Near" : c.expected;
    return c.subject ? `${short}(${expected}) ${c.subject}` : `${short}(${expected})`;
  }
  return node.kind;
}

export class BtView {
  private rows: BtRow[] = [];
  private byId = new Map<string, BtRow>();

  load(tree: BtNodeJson): void {
    this.rows = [];
    this.byId.clear();
    const walk = (node: BtNodeJson, depth: number) => {
      const row: BtRow = {
        id: node.id,
        depth,
        label: nodeLabel(node),
        kind: node.kind,
        status: "Idle",
      };
      this.rows.push(row);
      this.byId.set(node.id, row);
      for (const child of node.children ?? []) walk(child, depth + 1);
    };
    walk(tree, 0);
  }

  /** Apply the per-node statuses from one TickUpdate; unvisited nodes idle. */
  applyStatuses(statuses: Record<string, string>): void {
    for (const row of this.rows) {
      const s = statuses[row.id];
      row.status = s === "Success" || s === "Failure" || s === "Running" ? s : "Idle";
    }
  }

  statusOf(id: string): NodeStatus {
    return this.byId.get(id)?.status ?? "Idle";
  }

  get rowCount(): number {
    return this.rows.length;
  }

  allRows(): readonly BtRow[] {
    return this.rows;
  }

  /** Render into a container with appendable children (DOM ul, for example). */
  renderInto(container: {
    innerHTML: string;
    appendChild(el: unknown): void;
    ownerDocument?: { createElement(tag: string): any };
  }): void {
    container.innerHTML = "";
    const doc = container.ownerDocument;
    if (!doc) return;
    for (const row of this.rows) {
      const el = doc.createElement("li");
      el.textContent = `${"  ".repeat(row.depth)}${row.label}`;
      el.style = `color: ${STATUS_COLORS[row.status]}; margin-left: ${row.depth * 12}px`;
      el.dataset = { nodeId: row.id, status: row.status };
      container.appendChild(el);
    }
  }
}
