import type { ExampleBatch } from "./data.js";
import { ResidualNet } from "./model.js";
import { Rng } from "./rng.js";

export interface TrainOptions {
  epochs: number;
  lr: number;
  batchSize: number;
  seed: number;
  /** Decoupled L2 decay per step; keeps residual branches lean. */
  weightDecay?: number;
}

/**
 * Plain minibatch SGD on softmax cross-entropy. Toy scale on purpose:
 * enough to move a small synthetic task well above chance in seconds,
 * nowhere near a real training pipeline.
 */
export function trainToy(model: ResidualNet, data: ExampleBatch, opts: TrainOptions): number[] {
  const rng = new Rng(opts.seed);
  const dim = data.channels * data.spatial;
  const losses: number[] = [];
  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    const order = rng.permutation(data.count);
    let epochLoss = 0;
    let batches = 0;
    for (let start = 0; start + opts.batchSize <= data.count; start += opts.batchSize) {
      const n = opts.batchSize;
      const images = new Float64Array(n * dim);
      const labels = new Uint16Array(n);
      for (let i = 0; i < n; i++) {
        const src = order[start + i];
        images.set(data.images.subarray(src * dim, (src + 1) * dim), i * dim);
        labels[i] = data.labels[src];
      }
      const batch: ExampleBatch = {
        images,
        labels,
        count: n,
        channels: data.channels,
        spatial: data.spatial,
        classes: data.classes,
      };
      epochLoss += model.trainBatch(batch, opts.lr, opts.weightDecay ?? 0);
      batches++;
    }
    losses.push(epochLoss / Math.max(batches, 1));
  }
  return losses;
}
