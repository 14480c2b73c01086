// Image bytes are never touched client side; the hash shown next to each
// image lets a user check the pixels came verbatim from a service response.

export function b64ToBytes(b64: string): Uint8Array<ArrayBuffer> {
  const bin = atob(b64);
  const out = new Uint8Array(new ArrayBuffer(bin.length));
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

export async function sha256OfB64(b64: string): Promise<string> {
  const digest = await crypto.subtle.digest("SHA-256", b64ToBytes(b64));
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}
