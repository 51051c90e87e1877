export { Rng } from "./rng.js";
export { makeClassData, takeExamples, type ExampleBatch } from "./data.js";
export {
  ResidualNet,
  PRE_RESIDUAL,
  POST_RESIDUAL,
  OTHER,
  type Arch,
  type CapturePoint,
} from "./model.js";
export { encodeActivationDump, type NafLayer, type DumpDtype } from "./naf.js";
export { encodePredictionDump, type NpfModel } from "./npf.js";
export {
  exportActivations,
  exportPredictions,
  poolCapture,
  type ExportConfig,
  type ExportSummary,
  type NamedModel,
  type Pooling,
} from "./export.js";
export { deleteBlocksAndEvaluate, type DeletionPoint } from "./deletion.js";
export { trainToy, type TrainOptions } from "./train.js";
export {
  ExporterError,
  ShapeMismatchError,
  LabelSpaceMismatchError,
  NonResidualPointError,
  ConfigError,
} from "./errors.js";
