// Canvas ring rendering: seats on a circle, per-mode visuals in the middle
// ground, the client's own panel rendered separately by main.ts.

import type { ViewModel } from "./viewmodel.js";

// Presentation-only seat colors: fixed hue wheel by seat index.
export function seatColor(seat: number, nSeats: number): string {
  const hue = Math.round((360 * seat) / Math.max(nSeats, 1));
  return `hsl(${hue}, 70%, 55%)`;
}

// Feedback hue axis: 0 = red, 1 = violet (270 degrees).
export function feedbackHueToCss(hue: number): string {
  return `hsl(${Math.round(270 * hue)}, 85%, 55%)`;
}

export function seatPosition(
  seat: number,
  nSeats: number,
  cx: number,
  cy: number,
  radius: number,
): { x: number; y: number } {
  const angle = (2 * Math.PI * seat) / Math.max(nSeats, 1) - Math.PI / 2;
  return { x: cx + radius * Math.cos(angle), y: cy + radius * Math.sin(angle) };
}

export function renderRing(ctx: CanvasRenderingContext2D, vm: ViewModel): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) * 0.38;

  if (vm.mode === "reflect" && vm.territoryCells) {
    renderTerritory(ctx, vm, cx, cy, radius * 0.72);
  }

  for (let seat = 0; seat < vm.nSeats; seat++) {
    const pos = seatPosition(seat, vm.nSeats, cx, cy, radius);
    if (vm.mode === "tic" && vm.ballSizes && vm.ballBrightness) {
      renderBall(ctx, seat, vm, pos.x, pos.y);
    }
    if (vm.mode === "vc_feedback") {
      const dot = vm.dots.get(seat);
      if (dot) {
        ctx.beginPath();
        ctx.fillStyle = feedbackHueToCss(dot.hue);
        ctx.globalAlpha = 0.25 + 0.75 * dot.intensity;
        ctx.arc(pos.x, pos.y - 24, 5 + 12 * dot.size, 0, 2 * Math.PI);
        ctx.fill();
        ctx.globalAlpha = 1;
      }
    }
    // the seat marker itself
    ctx.beginPath();
    ctx.fillStyle = vm.roster[seat] ? seatColor(seat, vm.nSeats) : "#3a3a3a";
    ctx.arc(pos.x, pos.y, seat === vm.seat ? 13 : 9, 0, 2 * Math.PI);
    ctx.fill();
    if (seat === vm.seat) {
      ctx.strokeStyle = "#ffffff";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
    ctx.fillStyle = "#ddd";
    ctx.font = "11px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(vm.roster[seat] ?? String(seat), pos.x, pos.y + 24);
  }
}

// Territory: ring segments sized proportionally to each seat's cell count.
function renderTerritory(
  ctx: CanvasRenderingContext2D,
  vm: ViewModel,
  cx: number,
  cy: number,
  radius: number,
): void {
  const cells = vm.territoryCells!;
  const total = cells.reduce((a, b) => a + b, 0);
  if (total === 0) return;
  let angle = -Math.PI / 2;
  for (let seat = 0; seat < cells.length; seat++) {
    const span = (2 * Math.PI * cells[seat]) / total;
    if (span === 0) continue;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.fillStyle = seatColor(seat, vm.nSeats);
    ctx.globalAlpha = 0.6;
    ctx.arc(cx, cy, radius, angle, angle + span);
    ctx.closePath();
    ctx.fill();
    ctx.globalAlpha = 1;
    angle += span;
  }
}

// A ball at size 0 stays faintly visible at the brightness floor.
function renderBall(
  ctx: CanvasRenderingContext2D,
  seat: number,
  vm: ViewModel,
  x: number,
  y: number,
): void {
  const size = vm.ballSizes![seat] ?? 0;
  const brightness = vm.ballBrightness![seat] ?? 0;
  ctx.beginPath();
  ctx.fillStyle = seatColor(seat, vm.nSeats);
  ctx.globalAlpha = brightness;
  ctx.arc(x, y - 26, 6 + 16 * size, 0, 2 * Math.PI);
  ctx.fill();
  ctx.globalAlpha = 1;
}
