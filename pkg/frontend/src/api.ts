// Typed client over the service routes. Every mutation is one POST; the
// caller re-reads state afterwards instead of patching views locally.

import type {
  GapPayload,
  LogPayload,
  MappingRow,
  OpsResult,
  ProjectRecord,
  StatsPayload,
  SuggestionsPayload,
  ThreatRow,
  TreesPayload,
} from "./types.js";

/** A reply the service refused; carries the error envelope. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service could not be reached at all. */
export class ConnectionError extends Error {
  override name = "ConnectionError";
}

type Query = Record<string, string | number | undefined>;

interface Call {
  method?: string;
  body?: string;
  contentType?: string;
  query?: Query;
}

export class WorkbenchClient {
  constructor(
    readonly baseUrl = "",
    private readonly fetchImpl: typeof fetch = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, call: Call = {}): Promise<T> {
    let qs = "";
    if (call.query) {
      const params = new URLSearchParams();
      for (const [key, value] of Object.entries(call.query)) {
        if (value !== undefined) params.set(key, String(value));
      }
      const rendered = params.toString();
      if (rendered) qs = `?${rendered}`;
    }
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path + qs, {
        method: call.method ?? "GET",
        body: call.body,
        headers: call.contentType ? { "content-type": call.contentType } : undefined,
      });
    } catch (exc) {
      throw new ConnectionError(`service unreachable: ${(exc as Error).message}`);
    }
    if (!response.ok) {
      let code = "error";
      let message = `http ${response.status}`;
      try {
        const body = (await response.json()) as { error?: { code?: string; message?: string } };
        if (body.error) {
          code = body.error.code ?? code;
          message = body.error.message ?? message;
        }
      } catch {
        // non-JSON error body; keep the status-line message
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  listProjects(): Promise<{ projects: ProjectRecord[] }> {
    return this.request("/api/projects");
  }

  createProject(name: string): Promise<ProjectRecord> {
    return this.request("/api/projects", {
      method: "POST",
      body: JSON.stringify({ name }),
      contentType: "application/json",
    });
  }

  getProject(key: string): Promise<ProjectRecord> {
    return this.request(`/api/projects/${encodeURIComponent(key)}`);
  }

  postStatements(key: string, statement: string): Promise<OpsResult> {
    return this.request(`/api/projects/${encodeURIComponent(key)}/ops`, {
      method: "POST",
      body: JSON.stringify({ statement }),
      contentType: "application/json",
    });
  }

  getThreatTable(key: string, stage: "P" | "F"): Promise<{ stage: string; rows: ThreatRow[] }> {
    return this.request(`/api/projects/${encodeURIComponent(key)}/tables/${stage}`);
  }

  getMappingTable(key: string): Promise<{ stage: string; rows: MappingRow[] }> {
    return this.request(`/api/projects/${encodeURIComponent(key)}/tables/M`);
  }

  getSuggestions(
    key: string,
    opts: { threshold?: number; limit?: number } = {},
  ): Promise<SuggestionsPayload> {
    return this.request(`/api/projects/${encodeURIComponent(key)}/suggestions`, {
      query: { threshold: opts.threshold, limit: opts.limit },
    });
  }

  getGapReport(key: string): Promise<GapPayload> {
    return this.request(`/api/projects/${encodeURIComponent(key)}/gap-report`);
  }

  getLog(key: string, since = 0): Promise<LogPayload> {
    return this.request(`/api/projects/${encodeURIComponent(key)}/log`, { query: { since } });
  }

  importCatalog(
    key: string,
    text: string,
    opts: { suffix?: "" | "a" | "w"; sourceTag?: string } = {},
  ): Promise<{ imported: number; log_length: number }> {
    return this.request(`/api/projects/${encodeURIComponent(key)}/import`, {
      method: "POST",
      body: text,
      contentType: "text/csv",
      query: { suffix: opts.suffix, source_tag: opts.sourceTag },
    });
  }

  getTrees(key: string): Promise<TreesPayload> {
    return this.request(`/api/projects/${encodeURIComponent(key)}/trees`);
  }

  getStats(key: string, suffix?: "a" | "w"): Promise<StatsPayload> {
    return this.request(`/api/projects/${encodeURIComponent(key)}/stats`, { query: { suffix } });
  }
}
