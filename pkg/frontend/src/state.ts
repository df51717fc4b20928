// Latest-value snapshot of everything the dashboard renders. The console
// never computes control-law values itself; it displays what telemetry says.

import {
  BoundingBox,
  EventPayload,
  FramePayload,
  PgmImage,
  StatePayload,
  Telemetry,
  base64ToBytes,
  decodePgm,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface UiState {
  connection: ConnectionStatus;
  tick: number;
  t: number;
  rawFrame: PgmImage | null;
  enhancedFrame: PgmImage | null;
  showEnhanced: boolean;
  eL: number;
  eTh: number;
  mode: "pbvs" | "pbvs+haptic";
  gate: boolean;
  tauFinal: number;
  thetaX: number;
  thetaD: number;
  operatorProfile: string;
  bbox: BoundingBox | null;
  staleDetection: boolean;
  lastEvent: string;
  alerts: string[];
  frameCount: number;
}

export function initialState(): UiState {
  return {
    connection: "connecting",
    tick: 0,
    t: 0,
    rawFrame: null,
    enhancedFrame: null,
    showEnhanced: true,
    eL: 0,
    eTh: 40,
    mode: "pbvs",
    gate: false,
    tauFinal: 0,
    thetaX: 0,
    thetaD: 0,
    operatorProfile: "passive",
    bbox: null,
    staleDetection: false,
    lastEvent: "",
    alerts: [],
    frameCount: 0,
  };
}

const ALERT_EVENTS = new Set(["detection_lost", "command_rejected"]);
const MAX_ALERTS = 5;

export function applyTelemetry(state: UiState, msg: Telemetry): UiState {
  const next = { ...state, tick: msg.tick };
  switch (msg.type) {
    case "state": {
      const p = msg.payload as StatePayload;
      next.t = p.t;
      next.eL = p.e_l;
      next.eTh = p.e_th;
      next.mode = p.mode;
      next.gate = p.gate;
      next.tauFinal = p.tau_final;
      next.thetaX = p.theta_x;
      next.thetaD = p.theta_d;
      next.operatorProfile = p.operator_profile;
      next.bbox = p.bbox;
      next.staleDetection = p.bbox?.stale ?? false;
      break;
    }
    case "frame": {
      const p = msg.payload as FramePayload;
      const image = decodePgm(base64ToBytes(p.pgm_base64));
      if (p.kind === "raw") next.rawFrame = image;
      else next.enhancedFrame = image;
      next.frameCount = state.frameCount + 1;
      break;
    }
    case "event": {
      const p = msg.payload as EventPayload;
      next.lastEvent = p.name;
      if (ALERT_EVENTS.has(p.name)) {
        next.alerts = [...state.alerts, describeEvent(p)].slice(-MAX_ALERTS);
      }
      break;
    }
    default:
      break;
  }
  return next;
}

function describeEvent(event: EventPayload): string {
  const detail = event.detail === undefined ? "" : `: ${JSON.stringify(event.detail)}`;
  return `${event.name}${detail}`;
}
