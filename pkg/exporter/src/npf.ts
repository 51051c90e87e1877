import { ConfigError } from "./errors.js";

/**
 * NPF1 prediction dump layout (little-endian):
 *
 *   magic "NPF1" | modelCount u32 | exampleCount u32 | classCount u32
 *   trueLabels u16 * exampleCount
 *   per model: nameLen u16, UTF-8 name, u16 * exampleCount predictions
 *
 * Labels and predictions must be below classCount (and fit in u16);
 * model names must be unique. The analysis-side reader enforces the
 * same rules, so violations are refused here instead of written out.
 */

export interface NpfModel {
  name: string;
  predictions: Uint16Array;
}

function checkLabels(values: Uint16Array, classCount: number, what: string): void {
  for (let i = 0; i < values.length; i++) {
    if (values[i] >= classCount) {
      throw new ConfigError(`${what}[${i}] = ${values[i]} is outside the ${classCount}-class label space`);
    }
  }
}

export function encodePredictionDump(
  trueLabels: Uint16Array,
  models: NpfModel[],
  classCount: number,
): Buffer {
  if (!Number.isInteger(classCount) || classCount < 1 || classCount > 0x10000) {
    throw new ConfigError(`class count must be 1..65536, got ${classCount}`);
  }
  const exampleCount = trueLabels.length;
  if (exampleCount < 1) throw new ConfigError("dump needs at least one example");
  if (models.length < 1) throw new ConfigError("dump needs at least one model");
  checkLabels(trueLabels, classCount, "true labels");

  const header = Buffer.alloc(4 + 12 + 2 * exampleCount);
  header.write("NPF1", 0, "ascii");
  header.writeUInt32LE(models.length, 4);
  header.writeUInt32LE(exampleCount, 8);
  header.writeUInt32LE(classCount, 12);
  for (let i = 0; i < exampleCount; i++) header.writeUInt16LE(trueLabels[i], 16 + 2 * i);

  const parts: Buffer[] = [header];
  const seen = new Set<string>();
  for (const model of models) {
    if (seen.has(model.name)) throw new ConfigError(`duplicate model name ${model.name}`);
    seen.add(model.name);
    const raw = Buffer.from(model.name, "utf-8");
    if (raw.length < 1 || raw.length > 0xffff) {
      throw new ConfigError(`model name must be 1..65535 UTF-8 bytes, got ${raw.length}`);
    }
    if (model.predictions.length !== exampleCount) {
      throw new ConfigError(
        `model ${model.name}: ${model.predictions.length} predictions for ${exampleCount} examples`,
      );
    }
    checkLabels(model.predictions, classCount, `model ${model.name} predictions`);
    const rec = Buffer.alloc(2 + raw.length + 2 * exampleCount);
    rec.writeUInt16LE(raw.length, 0);
    raw.copy(rec, 2);
    for (let i = 0; i < exampleCount; i++) {
      rec.writeUInt16LE(model.predictions[i], 2 + raw.length + 2 * i);
    }
    parts.push(rec);
  }
  return Buffer.concat(parts);
}
