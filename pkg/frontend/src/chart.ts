// Score chart data. The chart holds one point per accepted step plus the
// session's base score; successive step responses are stitched by dropping
// each response's leading point (it repeats the current score).

export function appendTrace(chart: number[], responseTrace: number[]): number[] {
  if (chart.length === 0) return [...responseTrace];
  return [...chart, ...responseTrace.slice(1)];
}

export function isNonDecreasing(points: number[]): boolean {
  for (let i = 1; i < points.length; i++) {
    if (points[i] < points[i - 1]) return false;
  }
  return true;
}

/** SVG polyline points for the trace, scaled into a w x h viewBox. */
export function polylinePoints(trace: number[], w: number, h: number): string {
  if (trace.length === 0) return "";
  const lo = Math.min(...trace);
  const hi = Math.max(...trace);
  const span = hi - lo || 1;
  const dx = trace.length > 1 ? w / (trace.length - 1) : 0;
  return trace
    .map((v, i) => {
      const x = trace.length > 1 ? i * dx : w / 2;
      const y = h - ((v - lo) / span) * h;
      return `${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}
