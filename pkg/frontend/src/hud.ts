/**
 * Latency HUD model: turns STATS messages into display rows. Pure data so it
 * can be tested without a DOM; the viewer renders the rows as text.
 */

import { STATS_STAGES, StatsMessage } from './protocol.js';

const STAGE_LABELS: Record<(typeof STATS_STAGES)[number], string> = {
  camera_pose: 'Camera Pose Predictor',
  spatial: 'Spatial Module',
  rendering: 'Gaussian Rendering',
  interpolation: 'Interpolation Net',
  superres: 'Super Res Net',
};

export interface HudRow {
  label: string;
  valueMs: number;
}

export interface HudModel {
  rows: HudRow[];
  componentSumMs: number;
  delayMs: number;
  fps: number;
  posePending: boolean;
}

export function hudFromStats(stats: StatsMessage, posePending = false): HudModel {
  const rows = STATS_STAGES.map((stage, i) => ({
    label: STAGE_LABELS[stage],
    valueMs: stats.stageMeansMs[i],
  }));
  const componentSumMs = stats.stageMeansMs.reduce((acc, v) => acc + v, 0);
  return { rows, componentSumMs, delayMs: stats.delayMs, fps: stats.fps, posePending };
}

export function formatHud(model: HudModel): string[] {
  const lines = model.rows.map((r) => `${r.label}: ${r.valueMs.toFixed(1)} ms`);
  lines.push(`Component sum: ${model.componentSumMs.toFixed(1)} ms`);
  lines.push(`Stream delay: ${model.delayMs.toFixed(1)} ms`);
  lines.push(`${model.fps.toFixed(1)} fps`);
  if (model.posePending) lines.push('pose pending');
  return lines;
}
