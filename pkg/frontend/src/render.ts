/**
 * Canvas drawing for the console: streamed camera views, the touch
 * heatmap with its contact threshold, engagement/recording indicators,
 * and the stale-data banner. All decision logic lives in heatmap.ts and
 * state.ts; this file only paints.
 */
import { decodeArray } from "./b64.js";
import { contactCount, touchGrids } from "./heatmap.js";
import { ConsoleState, isStale } from "./state.js";
import { ArrayMsg } from "./schemas.js";

const CELL = 18;

export function drawImage(
  ctx: CanvasRenderingContext2D,
  msg: ArrayMsg,
  x: number,
  y: number,
  scale: number,
): void {
  const { shape, data } = decodeArray(msg);
  const [h, w, c] = [shape[0] ?? 0, shape[1] ?? 0, shape[2] ?? 1];
  const img = ctx.createImageData(w, h);
  for (let i = 0; i < h * w; i++) {
    if (c === 3) {
      img.data[i * 4] = Number(data[i * 3]);
      img.data[i * 4 + 1] = Number(data[i * 3 + 1]);
      img.data[i * 4 + 2] = Number(data[i * 3 + 2]);
    } else {
      // depth: uint16 scaled down to an 8-bit gray
      const v = Number(data[i]) >> 8;
      img.data[i * 4] = img.data[i * 4 + 1] = img.data[i * 4 + 2] = v;
    }
    img.data[i * 4 + 3] = 255;
  }
  const off = new OffscreenCanvas(w, h);
  const octx = off.getContext("2d")!;
  octx.putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, x, y, w * scale, h * scale);
}

function drawHeatmapHand(
  ctx: CanvasRenderingContext2D,
  grid: ReturnType<typeof touchGrids>["left"],
  x: number,
  y: number,
  label: string,
): void {
  ctx.fillStyle = "#ccc";
  ctx.font = "12px sans-serif";
  ctx.fillText(`${label} (${contactCount(grid)} contacts)`, x, y - 4);
  grid.forEach((row, r) =>
    row.forEach((cell, c) => {
      ctx.fillStyle = cell.color;
      ctx.fillRect(x + c * CELL, y + r * CELL, CELL - 1, CELL - 1);
      if (cell.contact) {
        ctx.strokeStyle = "#fff";
        ctx.lineWidth = 2;
        ctx.strokeRect(x + c * CELL + 1, y + r * CELL + 1, CELL - 3, CELL - 3);
      }
    }),
  );
}

export function render(
  ctx: CanvasRenderingContext2D,
  state: ConsoleState,
  nowMs: number,
): void {
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);

  const obs = state.obs;
  let x = 10;
  if (obs) {
    for (const [name, img] of Object.entries(obs.images)) {
      if (img) {
        drawImage(ctx, img, x, 30, 4);
        ctx.fillStyle = "#ccc";
        ctx.font = "12px sans-serif";
        ctx.fillText(name, x, 24);
        x += (img.shape[1] ?? 0) * 4 + 16;
      }
    }
    if (obs.touch) {
      const grids = touchGrids(obs.touch);
      drawHeatmapHand(ctx, grids.left, 10, 200, "touch L");
      drawHeatmapHand(ctx, grids.right, 10 + 7 * CELL, 200, "touch R");
    }
  }

  ctx.font = "13px sans-serif";
  const lamp = (on: boolean, okColor: string) => (on ? okColor : "#555");
  ctx.fillStyle = lamp(state.connection === "connected", "#4c4");
  ctx.fillText(`connection: ${state.connection}`, 10, 320);
  ctx.fillStyle = lamp(state.recording, "#e44");
  ctx.fillText(state.recording ? "REC" : "rec off", 10, 338);
  ctx.fillStyle = lamp(state.engaged.left, "#4c4");
  ctx.fillText(`arm L ${state.engaged.left ? "engaged" : "paused"}`, 10, 356);
  ctx.fillStyle = lamp(state.engaged.right, "#4c4");
  ctx.fillText(`arm R ${state.engaged.right ? "engaged" : "paused"}`, 10, 374);
  ctx.fillStyle = "#ccc";
  ctx.fillText("hands live", 10, 392); // hand control never pauses
  if (state.lastSavedPath) {
    ctx.fillText(`saved: ${state.lastSavedPath}`, 10, 410);
  }
  if (isStale(state, nowMs)) {
    ctx.fillStyle = "#fa0";
    ctx.font = "bold 16px sans-serif";
    ctx.fillText("STALE DATA — no recent observation", 10, 16);
  }
}
