import { describe, expect, it } from "vitest";
import { ApiClient, ApiError } from "../src/api";
import { FakeService, fetchOf } from "./fake_service";

describe("api client", () => {
  it("round-trips the documented field names", async () => {
    const svc = new FakeService();
    const api = new ApiClient("", fetchOf(svc));
    const health = await api.healthz();
    expect(health.stages_loaded).toBe(3);
    expect(health.manifest.hash).toBe(svc.manifest.hash);

    const cat = await api.garments();
    expect(cat.garments[0]).toEqual({
      id: "00000056",
      texture_kind: "stripes",
      width: 48,
      height: 64,
    });

    const tryon = await api.tryon({ garment_id: "00000056" });
    expect(tryon.image_png_b64).toBe(svc.tryonImage("00000056"));

    const started = await api.editStart({ editable_regions: [] });
    expect(started.session_id).toMatch(/^sess-\d{6}$/);
    expect(started.image_png_base64).toBe(svc.goldenImage("00000056"));
    expect(started.code_summary.shape_latent_dim).toBe(8);
    expect(started.code_summary.texture_feature_dim).toBe(16);

    const stepped = await api.editStep({
      session_id: started.session_id,
      editable_regions: ["torso-garment"],
      steps: 2,
      step_size: 0.5,
      budget: 1,
      components: ["shape", "texture"],
    });
    expect(stepped.score_trace).toEqual([0.25, 0.26, 0.27]);
    expect(stepped.steps_accepted).toBe(2);

    const reset = await api.editReset({ session_id: started.session_id });
    expect(reset.image_png_base64).toBe(svc.goldenImage("00000056"));
    expect(reset.code_delta_norm).toBe(0);
  });

  it("maps error bodies to ApiError with status and detail", async () => {
    const api = new ApiClient("", fetchOf(new FakeService()));
    const err = await api.tryon({ garment_id: "nope" }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
    expect(err.detail).toBe("unknown garment_id 'nope'");

    const err2 = await api.editStep({
      session_id: "sess-999999",
      steps: 1,
      step_size: 0.5,
      budget: 1,
      components: ["shape"],
    }).catch((e) => e);
    expect(err2.status).toBe(404);
  });
});
