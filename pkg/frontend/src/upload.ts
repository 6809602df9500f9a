// Upload handling: files are converted to base64 PNG for the JSON API.
// Uploads above the pixel cap get a client-side downscale offer instead of
// a hard rejection.

export const MAX_PIXELS = 8_000_000;

export function megapixels(width: number, height: number): number {
  return (width * height) / 1e6;
}

export function needsDownscale(width: number, height: number): boolean {
  return width * height > MAX_PIXELS;
}

/**
 * Largest integer dimensions that fit the pixel budget while keeping the
 * aspect ratio. Never upscales.
 */
export function downscaleDims(
  width: number,
  height: number,
  maxPixels: number = MAX_PIXELS,
): { width: number; height: number } {
  if (width * height <= maxPixels) {
    return { width, height };
  }
  const ratio = Math.sqrt(maxPixels / (width * height));
  let w = Math.max(1, Math.floor(width * ratio));
  let h = Math.max(1, Math.floor(height * ratio));
  // flooring both axes can still land one pixel row over budget
  while (w * h > maxPixels) {
    if (w >= h) w -= 1;
    else h -= 1;
  }
  return { width: w, height: h };
}

export function fileToDataUrl(file: Blob): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(reader.result as string);
    reader.onerror = () => reject(reader.error ?? new Error('read failed'));
    reader.readAsDataURL(file);
  });
}

export function dataUrlToB64(dataUrl: string): string {
  const comma = dataUrl.indexOf(',');
  if (comma < 0 || !dataUrl.startsWith('data:')) {
    throw new Error('not a data URL');
  }
  return dataUrl.slice(comma + 1);
}

export function loadImageDims(src: string): Promise<{ width: number; height: number }> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve({ width: img.naturalWidth, height: img.naturalHeight });
    img.onerror = () => reject(new Error('image decode failed'));
    img.src = src;
  });
}

/**
 * Re-encode an oversized upload at the given size. This touches input
 * pixels only; displayed results always come from server artifacts.
 */
export async function downscaleToPng(
  src: string,
  dims: { width: number; height: number },
): Promise<string> {
  const img = new Image();
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error('image decode failed'));
    img.src = src;
  });
  const canvas = document.createElement('canvas');
  canvas.width = dims.width;
  canvas.height = dims.height;
  const ctx = canvas.getContext('2d');
  if (!ctx) {
    throw new Error('canvas 2d context unavailable');
  }
  ctx.drawImage(img, 0, 0, dims.width, dims.height);
  return canvas.toDataURL('image/png');
}
