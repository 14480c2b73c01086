import type {
  EditResetRequest,
  EditResetResponse,
  EditStartRequest,
  EditStartResponse,
  EditStepRequest,
  EditStepResponse,
  GarmentsResponse,
  HealthzResponse,
  TryonRequest,
  TryonResponse,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function raise(res: Response): Promise<never> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-json error body, keep statusText
  }
  throw new ApiError(res.status, detail);
}

/** Thin typed client. baseUrl "" targets the origin serving the app. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!res.ok) await raise(res);
    return res.json();
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await raise(res);
    return res.json();
  }

  healthz(): Promise<HealthzResponse> {
    return this.get("/healthz");
  }

  garments(): Promise<GarmentsResponse> {
    return this.get("/garments");
  }

  tryon(req: TryonRequest): Promise<TryonResponse> {
    return this.post("/tryon", req);
  }

  editStart(req: EditStartRequest): Promise<EditStartResponse> {
    return this.post("/edit/start", req);
  }

  editStep(req: EditStepRequest): Promise<EditStepResponse> {
    return this.post("/edit/step", req);
  }

  editReset(req: EditResetRequest): Promise<EditResetResponse> {
    return this.post("/edit/reset", req);
  }
}
