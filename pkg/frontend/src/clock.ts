/**
 * Analog clock geometry.
 *
 * The engine announces whole virtual minutes; the face interpolates
 * between ticks from the real milliseconds elapsed since the last one so
 * the second-to-second motion looks continuous.
 */

export interface HandAngles {
  /** degrees clockwise from 12 o'clock */
  hour: number;
  minute: number;
}

export const MS_PER_VMINUTE_AT = (compressionFactor: number): number =>
  60_000 / compressionFactor;

export function clockAngles(
  vtime: number,
  msSinceTick = 0,
  msPerVminute = 3000,
): HandAngles {
  const fraction = Math.min(Math.max(msSinceTick / msPerVminute, 0), 1);
  const minutes = vtime + fraction;
  const minuteAngle = (minutes % 60) * 6;
  const hourAngle = ((minutes / 60) % 12) * 30;
  return { hour: round2(hourAngle), minute: round2(minuteAngle) };
}

function round2(x: number): number {
  return Math.round(x * 100) / 100;
}

export function formatVtime(vtime: number): string {
  const h = Math.floor(vtime / 60) % 24;
  const m = Math.floor(vtime % 60);
  return `${String(h).padStart(2, "0")}:${String(m).padStart(2, "0")}`;
}

export function dayEnded(vtime: number, dayEnd: number): boolean {
  return vtime >= dayEnd;
}
