// Browser bootstrap. Everything below is wiring: delegate events to the
// controller, repaint from its state, poll the log for movement. All state
// of record stays on the server.

import { ApiError, ConnectionError, WorkbenchClient } from "./api.js";
import { renderApp, WorkbenchApp, type Tab } from "./app.js";
import type { BrowserMode } from "./mapping.js";

const POLL_MS = 2000;

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const client = new WorkbenchClient("");
let app: WorkbenchApp | null = null;
let poller: number | null = null;

function paint(): void {
  if (!root) return;
  if (app) {
    root.innerHTML = renderApp(app);
    return;
  }
  root.innerHTML = `<p class="loading">no project selected</p>`;
}

function stopPolling(): void {
  if (poller !== null) {
    clearInterval(poller);
    poller = null;
  }
}

// connection loss stops the poller; only the retry button starts it again
function startPolling(): void {
  stopPolling();
  poller = window.setInterval(async () => {
    if (!app) return;
    try {
      const moved = await app.pollOnce();
      if (app.connection === "down") stopPolling();
      if (moved) paint();
    } catch {
      // surfaced on the next manual action
    }
  }, POLL_MS);
}

async function openProject(key: string): Promise<void> {
  app = new WorkbenchApp(client, key);
  await app.refresh();
  paint();
  if (app.connection === "ok") startPolling();
  else stopPolling();
}

async function exportGap(): Promise<void> {
  if (!app) return;
  const gap = await client.getGapReport(app.projectKey);
  const blob = new Blob([JSON.stringify(gap, null, 2)], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = "gap-report.json";
  anchor.click();
  URL.revokeObjectURL(url);
}

async function act(action: string, target: HTMLElement): Promise<void> {
  if (!app) return;
  switch (action) {
    case "retry":
      await app.refresh();
      if (app.connection === "ok") startPolling();
      break;
    case "tab":
      app.setTab((target.dataset.tab ?? "queue") as Tab);
      break;
    case "accept":
      app.openDialog(target.dataset.key ?? "");
      break;
    case "dismiss":
      app.dismissCandidate(target.dataset.key ?? "");
      break;
    case "cancel-dialog":
      app.cancelDialog();
      break;
    case "confirm-accept":
      await app.confirmAccept();
      break;
    case "mode-ticked":
      app.setBrowserMode("ticked" as BrowserMode);
      break;
    case "mode-all":
      app.setBrowserMode("all" as BrowserMode);
      break;
    case "toggle-node":
      app.toggleTreeNode(target.dataset.node ?? "");
      break;
    case "submit-mapping":
      await app.submitMapping();
      break;
    case "confirm-empty":
      await app.confirmEmptySafety();
      break;
    case "export-gap":
      await exportGap();
      return; // no repaint needed
    default:
      return;
  }
  paint();
}

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!target) return;
  const action = target.dataset.action ?? "";
  // checkboxes and radios repaint through the change listener instead
  if (["toggle-node", "pick-rep", "pick-map-rep", "rename-text"].includes(action)) return;
  event.preventDefault();
  void act(action, target).catch((exc) => {
    if (exc instanceof ConnectionError || exc instanceof ApiError) paint();
    else throw exc;
  });
});

root.addEventListener("change", (event) => {
  const target = event.target as HTMLElement;
  const action = target.dataset.action ?? "";
  if (!app) return;
  if (action === "toggle-node") {
    app.toggleTreeNode(target.dataset.node ?? "");
    paint();
  } else if (action === "pick-rep") {
    app.setDialogRepresentative((target as HTMLInputElement).value);
  } else if (action === "pick-map-rep") {
    app.pickTreeRepresentative((target as HTMLInputElement).value);
    paint();
  } else if (action === "select-final") {
    app.selectFinal((target as HTMLSelectElement).value);
    paint();
  }
});

root.addEventListener("input", (event) => {
  const target = event.target as HTMLInputElement;
  if (target.dataset.action === "rename-text" && app) {
    // tracked without repaint so the field keeps focus
    app.setDialogRename(target.value);
  }
});

async function boot(): Promise<void> {
  let projects;
  try {
    projects = (await client.listProjects()).projects;
  } catch (exc) {
    if (root) {
      root.innerHTML =
        `<div class="error-panel" data-role="connection-error">` +
        `<p>The workbench service is unreachable.</p></div>`;
    }
    throw exc;
  }
  if (projects.length === 0) {
    if (root) {
      root.innerHTML = `<div class="empty-state"><p>No projects yet. Create one with the CLI:` +
        ` <code>linddun-wb init &lt;name&gt;</code></p></div>`;
    }
    return;
  }
  // #<id-or-name> in the URL picks the project; default is the first one
  const key = decodeURIComponent(location.hash.slice(1)) || projects[0].id;
  await openProject(key);
}

window.addEventListener("hashchange", () => {
  const key = decodeURIComponent(location.hash.slice(1));
  if (key) void openProject(key);
});

void boot();
