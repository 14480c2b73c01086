import { ApiClient } from "./api";
import { appendTrace } from "./chart";
import { sha256OfB64 } from "./hash";
import type { GarmentItem } from "./types";

export type EditControls = {
  regions: string[];
  steps: number;
  stepSize: number;
  budget: number;
  components: string[];
};

export type SessionView = {
  sessionId: string;
  fixtureId: string;
  vocabulary: string[];
  shapeDim: number;
  textureDim: number;
  goldenHash: string;
  image: string;
  imageHash: string;
  scoreTrace: number[];
  codeDeltaNorm: number;
};

export type AppState = {
  catalog: GarmentItem[];
  catalogLoaded: boolean;
  selectedGarmentId: string | null;
  tryonImage: string | null;
  tryonHash: string | null;
  session: SessionView | null;
  manifestHash: string | null;
  banner: string | null;
};

function initialState(): AppState {
  return {
    catalog: [],
    catalogLoaded: false,
    selectedGarmentId: null,
    tryonImage: null,
    tryonHash: null,
    session: null,
    manifestHash: null,
    banner: null,
  };
}

/**
 * All user actions funnel through one queue, so at most one request is in
 * flight per session and actions apply in click order. The image on screen is
 * always the latest service response: a garment selection superseded by a
 * newer one has its response dropped, never shown (last write wins).
 */
export class AppController {
  readonly state: AppState = initialState();

  private chain: Promise<void> = Promise.resolve();
  private depth = 0;
  private selectGen = 0;
  private lastFailed: (() => Promise<void>) | null = null;
  private listeners: (() => void)[] = [];

  constructor(private readonly api: ApiClient) {}

  onChange(cb: () => void): () => void {
    this.listeners.push(cb);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== cb);
    };
  }

  get busy(): boolean {
    return this.depth > 0;
  }

  get pickerDisabled(): boolean {
    return !this.state.catalogLoaded || this.state.catalog.length === 0;
  }

  /** Image currently on screen: the session rendering while editing. */
  get currentImage(): string | null {
    return this.state.session ? this.state.session.image : this.state.tryonImage;
  }

  get currentImageHash(): string | null {
    return this.state.session ? this.state.session.imageHash : this.state.tryonHash;
  }

  loadCatalog(): Promise<void> {
    return this.enqueue(async () => {
      const res = await this.api.garments();
      this.state.catalog = res.garments;
      this.state.catalogLoaded = true;
      this.state.manifestHash = res.manifest.hash;
    });
  }

  selectGarment(id: string): Promise<void> {
    const gen = ++this.selectGen;
    this.state.selectedGarmentId = id;
    this.emit();
    return this.enqueue(async () => {
      const res = await this.api.tryon({ garment_id: id });
      if (gen !== this.selectGen) return; // superseded by a newer selection
      this.state.tryonImage = res.image_png_b64;
      this.state.tryonHash = await sha256OfB64(res.image_png_b64);
      this.state.session = null;
      this.state.manifestHash = res.manifest.hash;
    });
  }

  startEdit(regions: string[]): Promise<void> {
    const fixtureId = this.state.selectedGarmentId ?? undefined;
    return this.enqueue(async () => {
      const res = await this.api.editStart({
        fixture_id: fixtureId,
        editable_regions: regions,
      });
      const hash = await sha256OfB64(res.image_png_base64);
      this.state.session = {
        sessionId: res.session_id,
        fixtureId: res.fixture_id,
        vocabulary: res.code_summary.regions,
        shapeDim: res.code_summary.shape_latent_dim,
        textureDim: res.code_summary.texture_feature_dim,
        goldenHash: hash,
        image: res.image_png_base64,
        imageHash: hash,
        scoreTrace: [res.score],
        codeDeltaNorm: 0,
      };
      this.state.manifestHash = res.manifest.hash;
    });
  }

  step(controls: EditControls): Promise<void> {
    return this.enqueue(async () => {
      const sess = this.state.session;
      if (!sess) throw new Error("no active edit session");
      const res = await this.api.editStep({
        session_id: sess.sessionId,
        steps: controls.steps,
        step_size: controls.stepSize,
        budget: controls.budget,
        components: controls.components,
        ...(controls.regions.length > 0 ? { editable_regions: controls.regions } : {}),
      });
      sess.scoreTrace = appendTrace(sess.scoreTrace, res.score_trace);
      sess.image = res.image_png_base64;
      sess.imageHash = await sha256OfB64(res.image_png_base64);
      sess.codeDeltaNorm = res.code_delta_norm;
      this.state.manifestHash = res.manifest.hash;
    });
  }

  reset(): Promise<void> {
    return this.enqueue(async () => {
      const sess = this.state.session;
      if (!sess) throw new Error("no active edit session");
      const res = await this.api.editReset({ session_id: sess.sessionId });
      sess.image = res.image_png_base64;
      sess.imageHash = await sha256OfB64(res.image_png_base64);
      sess.scoreTrace = [res.score];
      sess.codeDeltaNorm = res.code_delta_norm;
      this.state.manifestHash = res.manifest.hash;
    });
  }

  /** Re-run the action behind the banner (service was unreachable). */
  retry(): Promise<void> {
    const task = this.lastFailed;
    if (!task) return Promise.resolve();
    this.lastFailed = null;
    return this.enqueue(task);
  }

  private emit(): void {
    for (const cb of this.listeners) cb();
  }

  private enqueue(task: () => Promise<void>): Promise<void> {
    this.depth += 1;
    const p = this.chain.then(() => this.run(task));
    this.chain = p;
    return p;
  }

  private async run(task: () => Promise<void>): Promise<void> {
    this.emit();
    try {
      await task();
      if (this.state.banner !== null) {
        this.state.banner = null;
        this.lastFailed = null;
      }
    } catch (err) {
      this.state.banner = err instanceof Error ? err.message : String(err);
      this.lastFailed = task;
    } finally {
      this.depth -= 1;
      this.emit();
    }
  }
}
