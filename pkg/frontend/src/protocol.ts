// Wire protocol: JSON text frames, version-tagged, PGM camera frames in
// base64. Mirrors the service schema (protocol_schema.json).

export const PROTOCOL_VERSION = 1;

export type TelemetryType = "frame" | "state" | "force" | "mode" | "event";

export interface BoundingBox {
  cx: number;
  cy: number;
  w: number;
  h: number;
  stale: boolean;
}

export interface StatePayload {
  t: number;
  e_l: number;
  e_th: number;
  mode: "pbvs" | "pbvs+haptic";
  tau_final: number;
  theta_x: number;
  theta_d: number;
  gate: boolean;
  operator_profile: string;
  applied_theta_cmd: number | null;
  bbox: BoundingBox | null;
  pose: { position: number[]; quat: number[] };
  nu: number[];
}

export interface FramePayload {
  kind: "raw" | "enhanced";
  pgm_base64: string;
}

export interface EventPayload {
  name: string;
  detail?: unknown;
}

export interface Telemetry {
  v: number;
  type: TelemetryType;
  tick: number;
  payload: StatePayload | FramePayload | EventPayload | Record<string, unknown>;
}

export function parseTelemetry(raw: string): Telemetry {
  const data = JSON.parse(raw) as Telemetry;
  if (data.v !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${data.v}`);
  }
  if (!["frame", "state", "force", "mode", "event"].includes(data.type)) {
    throw new Error(`unknown telemetry type ${data.type}`);
  }
  if (typeof data.tick !== "number" || data.tick < 0) {
    throw new Error("telemetry tick missing");
  }
  return data;
}

export function joystickCommand(thetaX: number, thetaMax: number): string {
  const clamped = Math.max(-thetaMax, Math.min(thetaMax, thetaX));
  return JSON.stringify({
    v: PROTOCOL_VERSION,
    type: "joystick",
    payload: { theta_x: clamped },
  });
}

export function scenarioCommand(action: "start" | "pause" | "reset"): string {
  return JSON.stringify({
    v: PROTOCOL_VERSION,
    type: "scenario-control",
    payload: { action },
  });
}

export function paramUpdate(key: "beta" | "current_enabled" | "operator_profile", value: unknown): string {
  return JSON.stringify({
    v: PROTOCOL_VERSION,
    type: "param-update",
    payload: { key, value },
  });
}

export interface PgmImage {
  width: number;
  height: number;
  pixels: Uint8Array; // row-major grayscale
}

export function decodePgm(bytes: Uint8Array): PgmImage {
  if (bytes[0] !== 0x50 || bytes[1] !== 0x35) {
    throw new Error("not a binary PGM (P5)");
  }
  let pos = 2;
  const tokens: number[] = [];
  while (tokens.length < 3) {
    while (pos < bytes.length && isSpace(bytes[pos])) pos++;
    if (bytes[pos] === 0x23) {
      // comment
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      continue;
    }
    let value = 0;
    let digits = 0;
    while (pos < bytes.length && !isSpace(bytes[pos])) {
      value = value * 10 + (bytes[pos] - 0x30);
      digits++;
      pos++;
    }
    if (digits === 0) throw new Error("malformed PGM header");
    tokens.push(value);
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = tokens;
  if (maxval !== 255) throw new Error(`expected 8-bit PGM, got maxval ${maxval}`);
  const pixels = bytes.slice(pos, pos + width * height);
  if (pixels.length !== width * height) throw new Error("truncated PGM payload");
  return { width, height, pixels };
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x0a || byte === 0x0d || byte === 0x09;
}

export function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  // Node (tests)
  return new Uint8Array(Buffer.from(b64, "base64"));
}
