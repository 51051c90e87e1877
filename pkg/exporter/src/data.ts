import { Rng } from "./rng.js";

/**
 * A batch of examples in a fixed order. Images are stored example-major
 * as (count, channels, spatial) in one flat array; labels are parallel.
 * The ordering is part of the contract: activation and prediction
 * exports made from the same batch describe the same example at the
 * same row index.
 */
export interface ExampleBatch {
  images: Float64Array;
  labels: Uint16Array;
  count: number;
  channels: number;
  spatial: number;
  classes: number;
}

/**
 * Synthetic classification data: each class is a fixed random
 * per-channel offset, broadcast across spatial positions, plus
 * per-position noise. The class signal survives average pooling by
 * construction (pooling averages the noise away, the offset stays),
 * so a pooled-readout model can genuinely generalize; an untrained
 * one still sits at chance.
 */
export function makeClassData(
  seed: number,
  count: number,
  channels: number,
  spatial: number,
  classes: number,
  noise = 1.0,
  separation = 0.5,
): ExampleBatch {
  const rng = new Rng(seed);
  const dim = channels * spatial;
  const means = new Float64Array(classes * channels);
  for (let i = 0; i < means.length; i++) means[i] = separation * rng.normal();

  const images = new Float64Array(count * dim);
  const labels = new Uint16Array(count);
  for (let e = 0; e < count; e++) {
    const y = e % classes; // balanced classes in a fixed rotation
    labels[e] = y;
    for (let c = 0; c < channels; c++) {
      const mean = means[y * channels + c];
      const base = e * dim + c * spatial;
      for (let s = 0; s < spatial; s++) {
        images[base + s] = mean + noise * rng.normal();
      }
    }
  }
  return { images, labels, count, channels, spatial, classes };
}

/** First n examples of a batch, same ordering. */
export function takeExamples(batch: ExampleBatch, n: number): ExampleBatch {
  const dim = batch.channels * batch.spatial;
  return {
    images: batch.images.slice(0, n * dim),
    labels: batch.labels.slice(0, n),
    count: n,
    channels: batch.channels,
    spatial: batch.spatial,
    classes: batch.classes,
  };
}

/**
 * Split one batch into train/test halves at a fixed boundary. Both
 * sides share the class means (they come from the same generation),
 * which is what makes held-out accuracy meaningful.
 */
export function splitExamples(
  batch: ExampleBatch,
  trainCount: number,
): { train: ExampleBatch; test: ExampleBatch } {
  const dim = batch.channels * batch.spatial;
  const train = takeExamples(batch, trainCount);
  const test: ExampleBatch = {
    images: batch.images.slice(trainCount * dim),
    labels: batch.labels.slice(trainCount),
    count: batch.count - trainCount,
    channels: batch.channels,
    spatial: batch.spatial,
    classes: batch.classes,
  };
  return { train, test };
}
