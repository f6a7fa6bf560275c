// Webcam capture loop: grab a frame, JPEG-encode, POST, repeat each interval.
// The loop's timing and error handling are pure of the DOM; the browser bits
// (getUserMedia, canvas encoding) are injected.

export const DEFAULT_CAPTURE_INTERVAL_MS = 5000;
export const UPLOAD_MAX_LONG_SIDE = 1280;
export const UPLOAD_JPEG_QUALITY = 0.8;

export type CaptureDeps = {
  grab: () => Promise<Blob | null>;
  post: (frame: Blob) => Promise<void>;
  setTimer: (fn: () => void, ms: number) => number;
  clearTimer: (id: number) => void;
  onError?: (message: string) => void;
};

export class CaptureLoop {
  private timer: number | null = null;
  private inFlight = false;
  posted = 0;

  constructor(
    private readonly deps: CaptureDeps,
    readonly intervalMs: number = DEFAULT_CAPTURE_INTERVAL_MS,
  ) {}

  get running(): boolean {
    return this.timer !== null;
  }

  start(): void {
    if (this.timer !== null) return;
    const tick = () => {
      this.timer = this.deps.setTimer(tick, this.intervalMs);
      void this.captureOnce();
    };
    tick(); // first frame immediately, then one per interval
  }

  stop(): void {
    if (this.timer !== null) {
      this.deps.clearTimer(this.timer);
      this.timer = null;
    }
  }

  private async captureOnce(): Promise<void> {
    if (this.inFlight) return; // skip a tick rather than queue uploads
    this.inFlight = true;
    try {
      const frame = await this.deps.grab();
      if (frame !== null) {
        await this.deps.post(frame);
        this.posted += 1;
      }
    } catch (error) {
      this.deps.onError?.(error instanceof Error ? error.message : String(error));
    } finally {
      this.inFlight = false;
    }
  }
}

// Downscale so the long side fits the bound; never upscale.
export function uploadDimensions(
  width: number,
  height: number,
  maxLongSide: number = UPLOAD_MAX_LONG_SIDE,
): { width: number; height: number } {
  const longSide = Math.max(width, height);
  if (longSide <= maxLongSide) return { width, height };
  const scale = maxLongSide / longSide;
  return {
    width: Math.max(1, Math.round(width * scale)),
    height: Math.max(1, Math.round(height * scale)),
  };
}

// Browser-bound pieces below.

export async function openWebcam(video: HTMLVideoElement): Promise<MediaStream> {
  const stream = await navigator.mediaDevices.getUserMedia({ video: true });
  video.srcObject = stream;
  await video.play();
  return stream;
}

export function webcamGrabber(video: HTMLVideoElement): () => Promise<Blob | null> {
  const canvas = document.createElement("canvas");
  return async () => {
    if (video.videoWidth === 0) return null; // camera not delivering yet
    const { width, height } = uploadDimensions(video.videoWidth, video.videoHeight);
    canvas.width = width;
    canvas.height = height;
    const context = canvas.getContext("2d");
    if (context === null) return null;
    context.drawImage(video, 0, 0, width, height);
    return new Promise<Blob | null>((resolve) =>
      canvas.toBlob(resolve, "image/jpeg", UPLOAD_JPEG_QUALITY),
    );
  };
}
