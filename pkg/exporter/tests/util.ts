// Test-side byte walkers for the two dump layouts. These re-derive the
// documented format independently of the writers so layout regressions
// show up as golden mismatches, not as self-consistent garbage.

export interface NafLayerHeader {
  name: string;
  stage: number;
  position: number;
  dtype: "f32" | "f64";
  featureCount: number;
  values: Float64Array;
}

export interface NafDump {
  exampleCount: number;
  layers: NafLayerHeader[];
}

export function walkNaf(buf: Buffer): NafDump {
  if (buf.toString("ascii", 0, 4) !== "NAF1") throw new Error("bad magic");
  if (buf.readUInt16LE(4) !== 1) throw new Error("bad version");
  const exampleCount = buf.readUInt32LE(6);
  const layerCount = buf.readUInt32LE(10);
  let off = 14;
  const layers: NafLayerHeader[] = [];
  for (let i = 0; i < layerCount; i++) {
    const nameLen = buf.readUInt16LE(off);
    off += 2;
    const name = buf.toString("utf-8", off, off + nameLen);
    off += nameLen;
    const stage = buf.readUInt8(off);
    const position = buf.readUInt8(off + 1);
    const dtypeTag = buf.readUInt8(off + 2);
    const featureCount = buf.readUInt32LE(off + 3);
    off += 7;
    const n = exampleCount * featureCount;
    const values = new Float64Array(n);
    if (dtypeTag === 0) {
      for (let j = 0; j < n; j++) values[j] = buf.readFloatLE(off + 4 * j);
      off += 4 * n;
    } else {
      for (let j = 0; j < n; j++) values[j] = buf.readDoubleLE(off + 8 * j);
      off += 8 * n;
    }
    layers.push({ name, stage, position, dtype: dtypeTag === 0 ? "f32" : "f64", featureCount, values });
  }
  if (off !== buf.length) throw new Error(`trailing bytes: ${buf.length - off}`);
  return { exampleCount, layers };
}

export interface NpfDump {
  exampleCount: number;
  classCount: number;
  trueLabels: Uint16Array;
  models: { name: string; predictions: Uint16Array }[];
}

export function walkNpf(buf: Buffer): NpfDump {
  if (buf.toString("ascii", 0, 4) !== "NPF1") throw new Error("bad magic");
  const modelCount = buf.readUInt32LE(4);
  const exampleCount = buf.readUInt32LE(8);
  const classCount = buf.readUInt32LE(12);
  let off = 16;
  const readLabels = (): Uint16Array => {
    const out = new Uint16Array(exampleCount);
    for (let i = 0; i < exampleCount; i++) out[i] = buf.readUInt16LE(off + 2 * i);
    off += 2 * exampleCount;
    return out;
  };
  const trueLabels = readLabels();
  const models: { name: string; predictions: Uint16Array }[] = [];
  for (let i = 0; i < modelCount; i++) {
    const nameLen = buf.readUInt16LE(off);
    off += 2;
    const name = buf.toString("utf-8", off, off + nameLen);
    off += nameLen;
    models.push({ name, predictions: readLabels() });
  }
  if (off !== buf.length) throw new Error(`trailing bytes: ${buf.length - off}`);
  return { exampleCount, classCount, trueLabels, models };
}
