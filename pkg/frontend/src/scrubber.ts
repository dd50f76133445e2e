/**
 * Frame navigation: slider + arrow keys, with a timeline strip that shows
 * flagged frames as red ticks (click to jump) for fast triage.
 */

import { ViewState } from "./state.js";

export class Scrubber {
  onNavigate: (frame: number) => void = () => {};

  constructor(
    private slider: HTMLInputElement,
    private strip: HTMLCanvasElement,
    private label: HTMLElement,
    private state: ViewState,
  ) {
    slider.addEventListener("input", () => {
      this.onNavigate(Number(slider.value));
    });
    strip.addEventListener("click", (e) => {
      const rect = strip.getBoundingClientRect();
      const frac = (e.clientX - rect.left) / rect.width;
      this.onNavigate(Math.floor(frac * this.state.frameCount));
    });
    document.addEventListener("keydown", (e) => {
      if (e.target instanceof HTMLInputElement) {
        return;
      }
      if (e.key === "ArrowRight") {
        this.onNavigate(this.state.frameIndex + 1);
      } else if (e.key === "ArrowLeft") {
        this.onNavigate(this.state.frameIndex - 1);
      }
    });
  }

  sync(): void {
    this.slider.max = String(Math.max(this.state.frameCount - 1, 0));
    this.slider.value = String(this.state.frameIndex);
    const ref = this.state.frameIndex === this.state.referenceIndex ? " (reference)" : "";
    this.label.textContent =
      `frame ${this.state.frameIndex + 1}/${this.state.frameCount}${ref}` +
      ` - ${this.state.flaggedCount()} flagged`;
    this.renderStrip();
  }

  private renderStrip(): void {
    const ctx = this.strip.getContext("2d");
    if (!ctx || this.state.frameCount === 0) {
      return;
    }
    const w = this.strip.width;
    const h = this.strip.height;
    const cell = w / this.state.frameCount;
    ctx.fillStyle = "#333";
    ctx.fillRect(0, 0, w, h);
    this.state.flaggedFrames.forEach((flagged, i) => {
      if (flagged) {
        ctx.fillStyle = "#ff1744";
        ctx.fillRect(i * cell, 0, Math.max(cell, 1), h);
      }
    });
    ctx.fillStyle = "#00e5ff";
    ctx.fillRect(this.state.referenceIndex * cell, h - 3, Math.max(cell, 1), 3);
    ctx.strokeStyle = "#fff";
    ctx.strokeRect(this.state.frameIndex * cell, 0, Math.max(cell, 1), h);
  }
}
