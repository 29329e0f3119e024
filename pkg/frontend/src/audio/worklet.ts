/**
 * AudioWorklet processor that forwards raw capture blocks to the main
 * thread.  Compiled standalone (no imports): worklet modules load in their
 * own scope.
 */

declare const sampleRate: number;

declare abstract class AudioWorkletProcessor {
  readonly port: MessagePort;
  abstract process(
    inputs: Float32Array[][],
    outputs: Float32Array[][],
    parameters: Record<string, Float32Array>,
  ): boolean;
}

declare function registerProcessor(
  name: string,
  ctor: new () => AudioWorkletProcessor,
): void;

class CaptureProcessor extends AudioWorkletProcessor {
  process(inputs: Float32Array[][]): boolean {
    const channel = inputs[0]?.[0];
    if (channel && channel.length) {
      const copy = new Float32Array(channel.length);
      copy.set(channel);
      this.port.postMessage({ samples: copy, rate: sampleRate }, [copy.buffer]);
    }
    return true;
  }
}

registerProcessor("kws-capture", CaptureProcessor);
