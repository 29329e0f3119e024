/**
 * Microphone capture: getUserMedia + AudioWorklet, with a ScriptProcessor
 * fallback for contexts where worklets are unavailable.  Each block is
 * delivered with the context's real sample rate so the caller can resample.
 */

export type BlockHandler = (samples: Float32Array, rate: number) => void;

export interface CaptureHandle {
  context: AudioContext;
  stop(): void;
}

export async function startCapture(onBlock: BlockHandler): Promise<CaptureHandle> {
  const stream = await navigator.mediaDevices.getUserMedia({
    audio: { echoCancellation: true, noiseSuppression: true, channelCount: 1 },
  });
  const context = new AudioContext();
  await context.resume();
  const source = context.createMediaStreamSource(stream);

  let cleanup: () => void;
  if (context.audioWorklet) {
    await context.audioWorklet.addModule("./dist/audio/worklet.js");
    const node = new AudioWorkletNode(context, "kws-capture");
    node.port.onmessage = (event) => {
      onBlock(event.data.samples as Float32Array, event.data.rate as number);
    };
    source.connect(node);
    cleanup = () => {
      node.port.onmessage = null;
      source.disconnect(node);
    };
  } else {
    const node = context.createScriptProcessor(4096, 1, 1);
    node.onaudioprocess = (event) => {
      onBlock(new Float32Array(event.inputBuffer.getChannelData(0)), context.sampleRate);
    };
    source.connect(node);
    node.connect(context.destination);
    cleanup = () => {
      node.onaudioprocess = null;
      source.disconnect(node);
      node.disconnect();
    };
  }

  return {
    context,
    stop() {
      cleanup();
      for (const track of stream.getTracks()) {
        track.stop();
      }
      void context.close();
    },
  };
}
