import { createHash } from "node:crypto";
import { describe, expect, it } from "vitest";
import { b64ToBytes, sha256OfB64 } from "../src/hash";

describe("image hashing", () => {
  it("matches the reference sha-256 of the decoded bytes", async () => {
    const b64 = btoa("abc");
    expect(await sha256OfB64(b64)).toBe(
      "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad",
    );
  });

  it("agrees with node's digest on arbitrary payloads", async () => {
    const payload = btoa("png-bytes:golden:00000056");
    const expected = createHash("sha256").update(Buffer.from(payload, "base64")).digest("hex");
    expect(await sha256OfB64(payload)).toBe(expected);
  });

  it("decodes base64 to the exact byte sequence", () => {
    expect(Array.from(b64ToBytes(btoa("\x00\x01\xfe")))).toEqual([0, 1, 254]);
  });
});
