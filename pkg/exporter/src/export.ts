import { writeFileSync } from "node:fs";
import type { ExampleBatch } from "./data.js";
import { ConfigError, LabelSpaceMismatchError } from "./errors.js";
import type { CapturePoint } from "./model.js";
import { ResidualNet } from "./model.js";
import { encodeActivationDump, type DumpDtype, type NafLayer } from "./naf.js";
import { encodePredictionDump, type NpfModel } from "./npf.js";

export type Pooling = "globalAveragePool" | "flatten";

/**
 * Everything one activation export needs: which model, which examples,
 * how spatial maps become feature vectors, which capture points to
 * keep, the storage dtype, and where the dump goes.
 */
export interface ExportConfig {
  /** Path to a toy-residual-net checkpoint, or an in-memory model. */
  model: string | ResidualNet;
  examples: ExampleBatch;
  /** Default globalAveragePool; recorded as a layer-name suffix. */
  pooling?: Pooling;
  /** Keep only these capture-point positions (default: all). */
  positions?: number[];
  /** Keep only these stage tags (default: all). */
  stages?: number[];
  /** On-disk value dtype, default f32. */
  dtype?: DumpDtype;
  out: string;
}

export interface ExportSummary {
  path: string;
  exampleCount: number;
  layerCount: number;
  layerNames: string[];
}

function resolveModel(model: string | ResidualNet): ResidualNet {
  return typeof model === "string" ? ResidualNet.loadCheckpoint(model) : model;
}

/**
 * Pool one capture point into a per-example feature matrix. Global
 * average pooling collapses the spatial axis to one value per channel;
 * flatten keeps every (channel, position) pair as its own feature.
 * Non-spatial points pass through unchanged under either policy. The
 * policy is recorded in the layer name so a dump is self-describing.
 */
export function poolCapture(
  point: CapturePoint,
  pooling: Pooling,
  exampleCount: number,
): { name: string; featureCount: number; values: Float64Array } {
  if (!point.spatial) {
    return { name: point.name, featureCount: point.channels, values: point.values };
  }
  const { channels, spatialSize } = point;
  if (pooling === "flatten") {
    return {
      name: `${point.name}.flat`,
      featureCount: channels * spatialSize,
      values: point.values,
    };
  }
  const pooled = new Float64Array(exampleCount * channels);
  for (let e = 0; e < exampleCount; e++) {
    const base = e * channels * spatialSize;
    for (let c = 0; c < channels; c++) {
      let acc = 0;
      for (let s = 0; s < spatialSize; s++) acc += point.values[base + c * spatialSize + s];
      pooled[e * channels + c] = acc / spatialSize;
    }
  }
  return { name: `${point.name}.gap`, featureCount: channels, values: pooled };
}

/**
 * Run the model over the examples and write one NAF1 layer record per
 * capture point, ordered input to output, stage and pre/post-residual
 * tags set from the architecture.
 */
export function exportActivations(config: ExportConfig): ExportSummary {
  const model = resolveModel(config.model);
  const pooling = config.pooling ?? "globalAveragePool";
  const dtype = config.dtype ?? "f32";
  if (pooling !== "globalAveragePool" && pooling !== "flatten") {
    throw new ConfigError(`unknown pooling policy ${String(pooling)}`);
  }

  let points = model.capture(config.examples);
  if (config.positions !== undefined) {
    const keep = new Set(config.positions);
    points = points.filter((p) => keep.has(p.position));
  }
  if (config.stages !== undefined) {
    const keep = new Set(config.stages);
    points = points.filter((p) => keep.has(p.stage));
  }
  if (points.length === 0) {
    throw new ConfigError("capture selection matched no points");
  }

  const layers: NafLayer[] = points.map((point) => {
    const pooled = poolCapture(point, pooling, config.examples.count);
    return {
      name: pooled.name,
      stage: point.stage,
      position: point.position,
      dtype,
      featureCount: pooled.featureCount,
      values: pooled.values,
    };
  });
  const dump = encodeActivationDump(config.examples.count, layers);
  writeFileSync(config.out, dump);
  return {
    path: config.out,
    exampleCount: config.examples.count,
    layerCount: layers.length,
    layerNames: layers.map((l) => l.name),
  };
}

export interface NamedModel {
  name: string;
  model: string | ResidualNet;
}

/**
 * Predict the examples with every model and write one NPF1 dump:
 * the true labels plus one prediction row per model, example order
 * identical to the activation export for the same batch.
 */
export function exportPredictions(
  modelList: NamedModel[],
  examples: ExampleBatch,
  out: string,
): ExportSummary {
  if (modelList.length < 1) throw new ConfigError("prediction export needs at least one model");
  const rows: NpfModel[] = [];
  for (const entry of modelList) {
    const model = resolveModel(entry.model);
    if (model.arch.classes !== examples.classes) {
      throw new LabelSpaceMismatchError(
        `model ${entry.name} predicts ${model.arch.classes} classes, ` +
          `examples are labeled over ${examples.classes}`,
      );
    }
    rows.push({ name: entry.name, predictions: model.predict(examples) });
  }
  const dump = encodePredictionDump(examples.labels, rows, examples.classes);
  writeFileSync(out, dump);
  return {
    path: out,
    exampleCount: examples.count,
    layerCount: rows.length,
    layerNames: rows.map((r) => r.name),
  };
}
