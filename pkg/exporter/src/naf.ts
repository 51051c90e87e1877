import { ConfigError } from "./errors.js";

/**
 * NAF1 activation dump layout (little-endian):
 *
 *   magic "NAF1" | version u16 (=1) | exampleCount u32 | layerCount u32
 *   per layer: nameLen u16, UTF-8 name, stageTag u8, positionTag u8
 *              (0 pre-residual, 1 post-residual, 2 other), dtypeTag u8
 *              (0 f32, 1 f64), featureCount u32, then
 *              exampleCount*featureCount values row-major
 *
 * The reader on the analysis side rejects dumps with duplicate names,
 * zero counts, invalid tags, non-finite payloads, truncation, or
 * trailing bytes, so this writer refuses to produce any of those.
 */

export type DumpDtype = "f32" | "f64";

export interface NafLayer {
  name: string;
  stage: number;
  position: number;
  dtype: DumpDtype;
  featureCount: number;
  /** exampleCount * featureCount values, example-major. */
  values: Float64Array;
}

function encodeName(name: string, what: string): Buffer {
  const raw = Buffer.from(name, "utf-8");
  if (raw.length < 1 || raw.length > 0xffff) {
    throw new ConfigError(`${what} name must be 1..65535 UTF-8 bytes, got ${raw.length}`);
  }
  const out = Buffer.alloc(2 + raw.length);
  out.writeUInt16LE(raw.length, 0);
  raw.copy(out, 2);
  return out;
}

function requireFinite(values: Float64Array, what: string): void {
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new ConfigError(`${what} has a non-finite value at index ${i}`);
    }
  }
}

export function encodeActivationDump(exampleCount: number, layers: NafLayer[]): Buffer {
  if (!Number.isInteger(exampleCount) || exampleCount < 1) {
    throw new ConfigError(`example count must be a positive integer, got ${exampleCount}`);
  }
  if (layers.length < 1) throw new ConfigError("dump needs at least one layer");

  const header = Buffer.alloc(4 + 2 + 4 + 4);
  header.write("NAF1", 0, "ascii");
  header.writeUInt16LE(1, 4);
  header.writeUInt32LE(exampleCount, 6);
  header.writeUInt32LE(layers.length, 10);

  const parts: Buffer[] = [header];
  const seen = new Set<string>();
  for (const layer of layers) {
    if (seen.has(layer.name)) throw new ConfigError(`duplicate layer name ${layer.name}`);
    seen.add(layer.name);
    if (!Number.isInteger(layer.stage) || layer.stage < 0 || layer.stage > 0xff) {
      throw new ConfigError(`layer ${layer.name}: stage tag ${layer.stage} outside u8 range`);
    }
    if (![0, 1, 2].includes(layer.position)) {
      throw new ConfigError(`layer ${layer.name}: position tag ${layer.position} invalid`);
    }
    if (!Number.isInteger(layer.featureCount) || layer.featureCount < 1) {
      throw new ConfigError(`layer ${layer.name}: feature count must be at least 1`);
    }
    if (layer.values.length !== exampleCount * layer.featureCount) {
      throw new ConfigError(
        `layer ${layer.name}: ${layer.values.length} values, ` +
          `expected ${exampleCount} x ${layer.featureCount}`,
      );
    }
    requireFinite(layer.values, `layer ${layer.name}`);

    const meta = Buffer.alloc(3 + 4);
    meta.writeUInt8(layer.stage, 0);
    meta.writeUInt8(layer.position, 1);
    meta.writeUInt8(layer.dtype === "f32" ? 0 : 1, 2);
    meta.writeUInt32LE(layer.featureCount, 3);

    // explicit LE writes so the dump is identical on any host
    let payload: Buffer;
    if (layer.dtype === "f32") {
      payload = Buffer.alloc(4 * layer.values.length);
      for (let i = 0; i < layer.values.length; i++) payload.writeFloatLE(layer.values[i], 4 * i);
    } else {
      payload = Buffer.alloc(8 * layer.values.length);
      for (let i = 0; i < layer.values.length; i++) payload.writeDoubleLE(layer.values[i], 8 * i);
    }
    parts.push(encodeName(layer.name, `layer ${layer.name}`), meta, payload);
  }
  return Buffer.concat(parts);
}
