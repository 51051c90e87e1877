import { readFileSync, writeFileSync } from "node:fs";
import { Rng } from "./rng.js";
import { ConfigError, NonResidualPointError, ShapeMismatchError } from "./errors.js";
import type { ExampleBatch } from "./data.js";

/** Position tags shared with the activation dump format. */
export const PRE_RESIDUAL = 0;
export const POST_RESIDUAL = 1;
export const OTHER = 2;

export interface Arch {
  inChannels: number;
  channels: number;
  spatial: number;
  /** Residual blocks per stage, ordered input to output. */
  stageBlocks: number[];
  classes: number;
}

/**
 * One capture point's activations for a batch, before any pooling.
 * Spatial points hold (channels x spatialSize) features per example,
 * channel-major; non-spatial points have spatialSize 1.
 */
export interface CapturePoint {
  name: string;
  stage: number;
  position: number;
  spatial: boolean;
  channels: number;
  spatialSize: number;
  values: Float64Array;
}

/** Dense map, weight laid out (outDim x inDim) row-major. */
class Linear {
  w: Float64Array;
  b: Float64Array;
  gw: Float64Array;
  gb: Float64Array;

  constructor(
    readonly outDim: number,
    readonly inDim: number,
  ) {
    this.w = new Float64Array(outDim * inDim);
    this.b = new Float64Array(outDim);
    this.gw = new Float64Array(outDim * inDim);
    this.gb = new Float64Array(outDim);
  }

  init(rng: Rng, gain: number): void {
    const scale = gain / Math.sqrt(this.inDim);
    for (let i = 0; i < this.w.length; i++) this.w[i] = scale * rng.normal();
    this.b.fill(0);
  }

  zeroGrad(): void {
    this.gw.fill(0);
    this.gb.fill(0);
  }

  step(lr: number, weightDecay = 0): void {
    // decoupled decay on weights only, never on biases
    const keep = 1 - lr * weightDecay;
    for (let i = 0; i < this.w.length; i++) this.w[i] = keep * this.w[i] - lr * this.gw[i];
    for (let i = 0; i < this.b.length; i++) this.b[i] -= lr * this.gb[i];
  }
}

class ResidualBlock {
  conv1: Linear;
  conv2: Linear;
  deleted = false;

  constructor(channels: number) {
    this.conv1 = new Linear(channels, channels);
    this.conv2 = new Linear(channels, channels);
  }
}

// feature maps are flat (examples, channels, spatial) arrays,
// index e*C*S + c*S + s

function convForward(
  lin: Linear,
  input: Float64Array,
  examples: number,
  inC: number,
  spatial: number,
): Float64Array {
  const outC = lin.outDim;
  const out = new Float64Array(examples * outC * spatial);
  for (let e = 0; e < examples; e++) {
    const inBase = e * inC * spatial;
    const outBase = e * outC * spatial;
    for (let co = 0; co < outC; co++) {
      const wBase = co * inC;
      for (let s = 0; s < spatial; s++) {
        let acc = lin.b[co];
        for (let ci = 0; ci < inC; ci++) {
          acc += lin.w[wBase + ci] * input[inBase + ci * spatial + s];
        }
        out[outBase + co * spatial + s] = acc;
      }
    }
  }
  return out;
}

function convBackward(
  lin: Linear,
  input: Float64Array,
  dOut: Float64Array,
  examples: number,
  inC: number,
  spatial: number,
): Float64Array {
  const outC = lin.outDim;
  const dIn = new Float64Array(examples * inC * spatial);
  for (let e = 0; e < examples; e++) {
    const inBase = e * inC * spatial;
    const outBase = e * outC * spatial;
    for (let co = 0; co < outC; co++) {
      const wBase = co * inC;
      for (let s = 0; s < spatial; s++) {
        const g = dOut[outBase + co * spatial + s];
        if (g === 0) continue;
        lin.gb[co] += g;
        for (let ci = 0; ci < inC; ci++) {
          lin.gw[wBase + ci] += g * input[inBase + ci * spatial + s];
          dIn[inBase + ci * spatial + s] += g * lin.w[wBase + ci];
        }
      }
    }
  }
  return dIn;
}

function reluInPlace(x: Float64Array): void {
  for (let i = 0; i < x.length; i++) if (x[i] < 0) x[i] = 0;
}

interface BlockTrace {
  input: Float64Array;
  h: Float64Array | null; // post-relu branch hidden, null when deleted
  f: Float64Array | null; // branch output, null when deleted
  out: Float64Array;
}

interface Trace {
  stemPre: Float64Array;
  stem: Float64Array;
  blocks: BlockTrace[]; // stage-major flattened
  pooled: Float64Array;
  logits: Float64Array;
}

/**
 * Toy residual classifier on (channels x spatial) feature maps. Every
 * layer is a 1x1 convolution, i.e. a dense map over channels shared
 * across spatial positions, so residual blocks keep their input shape
 * and deletion reduces to skipping the branch. Stem and branch hiddens
 * use ReLU; the head is a linear readout of the spatial mean.
 */
export class ResidualNet {
  readonly arch: Arch;
  stem: Linear;
  stages: ResidualBlock[][];
  head: Linear;

  constructor(arch: Arch, seed = 0) {
    validateArch(arch);
    this.arch = {
      inChannels: arch.inChannels,
      channels: arch.channels,
      spatial: arch.spatial,
      stageBlocks: [...arch.stageBlocks],
      classes: arch.classes,
    };
    this.stem = new Linear(arch.channels, arch.inChannels);
    this.stages = arch.stageBlocks.map((count) => {
      const blocks: ResidualBlock[] = [];
      for (let b = 0; b < count; b++) blocks.push(new ResidualBlock(arch.channels));
      return blocks;
    });
    this.head = new Linear(arch.classes, arch.channels);

    const rng = new Rng(seed);
    this.stem.init(rng, Math.SQRT2);
    for (const stage of this.stages) {
      for (const block of stage) {
        block.conv1.init(rng, Math.SQRT2);
        block.conv2.init(rng, 0.2); // small branches: blocks start near identity
      }
    }
    this.head.init(rng, 1);
  }

  private checkInput(batch: ExampleBatch): void {
    const { inChannels, spatial, classes } = this.arch;
    if (batch.channels !== inChannels || batch.spatial !== spatial) {
      throw new ShapeMismatchError(
        `examples are (${batch.channels} x ${batch.spatial}) maps, ` +
          `model expects (${inChannels} x ${spatial})`,
      );
    }
    if (batch.classes !== classes) {
      throw new ShapeMismatchError(
        `examples declare ${batch.classes} classes, model has ${classes}`,
      );
    }
  }

  private forward(images: Float64Array, examples: number): Trace {
    const { inChannels, channels, spatial } = this.arch;
    const stemPre = convForward(this.stem, images, examples, inChannels, spatial);
    const stem = stemPre.slice();
    reluInPlace(stem);

    let current = stem;
    const blocks: BlockTrace[] = [];
    for (const stage of this.stages) {
      for (const block of stage) {
        const input = current;
        if (block.deleted) {
          // identity through the skip connection, branch skipped entirely
          blocks.push({ input, h: null, f: null, out: input });
          continue;
        }
        const h = convForward(block.conv1, input, examples, channels, spatial);
        reluInPlace(h);
        const f = convForward(block.conv2, h, examples, channels, spatial);
        const out = new Float64Array(input.length);
        for (let i = 0; i < out.length; i++) out[i] = input[i] + f[i];
        blocks.push({ input, h, f, out });
        current = out;
      }
    }

    const pooled = new Float64Array(examples * channels);
    for (let e = 0; e < examples; e++) {
      for (let c = 0; c < channels; c++) {
        let acc = 0;
        const base = e * channels * spatial + c * spatial;
        for (let s = 0; s < spatial; s++) acc += current[base + s];
        pooled[e * channels + c] = acc / spatial;
      }
    }

    const classes = this.arch.classes;
    const logits = new Float64Array(examples * classes);
    for (let e = 0; e < examples; e++) {
      for (let k = 0; k < classes; k++) {
        let acc = this.head.b[k];
        for (let c = 0; c < channels; c++) {
          acc += this.head.w[k * channels + c] * pooled[e * channels + c];
        }
        logits[e * classes + k] = acc;
      }
    }
    return { stemPre, stem, blocks, pooled, logits };
  }

  logits(batch: ExampleBatch): Float64Array {
    this.checkInput(batch);
    return this.forward(batch.images, batch.count).logits;
  }

  predict(batch: ExampleBatch): Uint16Array {
    const logits = this.logits(batch);
    const classes = this.arch.classes;
    const out = new Uint16Array(batch.count);
    for (let e = 0; e < batch.count; e++) {
      let best = 0;
      for (let k = 1; k < classes; k++) {
        if (logits[e * classes + k] > logits[e * classes + best]) best = k;
      }
      out[e] = best;
    }
    return out;
  }

  accuracy(batch: ExampleBatch): number {
    const pred = this.predict(batch);
    let hits = 0;
    for (let e = 0; e < batch.count; e++) if (pred[e] === batch.labels[e]) hits++;
    return hits / batch.count;
  }

  /**
   * Run the batch and record every capture point, input to output:
   * the stem output, each block's branch output (pre-residual) and
   * block output (post-residual), the pooled head input, and the
   * logits. A deleted block contributes an all-zero branch capture.
   */
  capture(batch: ExampleBatch): CapturePoint[] {
    this.checkInput(batch);
    const { channels, spatial, classes } = this.arch;
    const trace = this.forward(batch.images, batch.count);
    const points: CapturePoint[] = [];
    const spatialPoint = (
      name: string,
      stage: number,
      position: number,
      values: Float64Array,
    ): CapturePoint => ({
      name,
      stage,
      position,
      spatial: true,
      channels,
      spatialSize: spatial,
      values,
    });

    points.push(spatialPoint("stem", 0, OTHER, trace.stem));
    let blockIndex = 0;
    for (let s = 0; s < this.stages.length; s++) {
      for (let b = 0; b < this.stages[s].length; b++) {
        const t = trace.blocks[blockIndex++];
        const branch = t.f ?? new Float64Array(t.input.length);
        points.push(spatialPoint(`s${s}b${b}.pre`, s, PRE_RESIDUAL, branch));
        points.push(spatialPoint(`s${s}b${b}.post`, s, POST_RESIDUAL, t.out));
      }
    }
    const headStage = this.stages.length;
    points.push({
      name: "head.in",
      stage: headStage,
      position: OTHER,
      spatial: false,
      channels,
      spatialSize: 1,
      values: trace.pooled,
    });
    points.push({
      name: "head.logits",
      stage: headStage,
      position: OTHER,
      spatial: false,
      channels: classes,
      spatialSize: 1,
      values: trace.logits,
    });
    return points;
  }

  /**
   * One SGD step on softmax cross-entropy over the given examples.
   * Returns the mean loss before the update. Weight decay applies to
   * the residual branches only: the stem and head carry the task, the
   * blocks stay lean refinements.
   */
  trainBatch(batch: ExampleBatch, lr: number, weightDecay = 0): number {
    this.checkInput(batch);
    const { channels, spatial, classes } = this.arch;
    const examples = batch.count;
    const trace = this.forward(batch.images, examples);

    this.stem.zeroGrad();
    this.head.zeroGrad();
    for (const stage of this.stages) {
      for (const block of stage) {
        block.conv1.zeroGrad();
        block.conv2.zeroGrad();
      }
    }

    // softmax cross-entropy; dLogits = (softmax - onehot) / examples
    const dLogits = new Float64Array(examples * classes);
    let loss = 0;
    for (let e = 0; e < examples; e++) {
      const base = e * classes;
      let max = -Infinity;
      for (let k = 0; k < classes; k++) max = Math.max(max, trace.logits[base + k]);
      let z = 0;
      for (let k = 0; k < classes; k++) z += Math.exp(trace.logits[base + k] - max);
      const logZ = Math.log(z) + max;
      loss += logZ - trace.logits[base + batch.labels[e]];
      for (let k = 0; k < classes; k++) {
        const p = Math.exp(trace.logits[base + k] - logZ);
        dLogits[base + k] = (p - (k === batch.labels[e] ? 1 : 0)) / examples;
      }
    }
    loss /= examples;

    // head
    const dPooled = new Float64Array(examples * channels);
    for (let e = 0; e < examples; e++) {
      for (let k = 0; k < classes; k++) {
        const g = dLogits[e * classes + k];
        this.head.gb[k] += g;
        for (let c = 0; c < channels; c++) {
          this.head.gw[k * channels + c] += g * trace.pooled[e * channels + c];
          dPooled[e * channels + c] += g * this.head.w[k * channels + c];
        }
      }
    }

    // mean pool spreads gradient evenly over positions
    let dCurrent = new Float64Array(examples * channels * spatial);
    for (let e = 0; e < examples; e++) {
      for (let c = 0; c < channels; c++) {
        const g = dPooled[e * channels + c] / spatial;
        const base = e * channels * spatial + c * spatial;
        for (let s = 0; s < spatial; s++) dCurrent[base + s] = g;
      }
    }

    // blocks in reverse
    let blockIndex = trace.blocks.length - 1;
    for (let s = this.stages.length - 1; s >= 0; s--) {
      for (let b = this.stages[s].length - 1; b >= 0; b--) {
        const block = this.stages[s][b];
        const t = trace.blocks[blockIndex--];
        if (block.deleted) continue; // identity: gradient passes through
        const dF = dCurrent;
        const dH = convBackward(block.conv2, t.h!, dF, examples, channels, spatial);
        for (let i = 0; i < dH.length; i++) if (t.h![i] === 0) dH[i] = 0;
        const dBranchIn = convBackward(block.conv1, t.input, dH, examples, channels, spatial);
        const dIn = new Float64Array(dCurrent.length);
        for (let i = 0; i < dIn.length; i++) dIn[i] = dCurrent[i] + dBranchIn[i];
        dCurrent = dIn;
      }
    }

    // stem
    const dStem = dCurrent;
    for (let i = 0; i < dStem.length; i++) if (trace.stemPre[i] <= 0) dStem[i] = 0;
    convBackward(this.stem, batch.images, dStem, examples, this.arch.inChannels, spatial);

    this.head.step(lr);
    this.stem.step(lr);
    for (const stage of this.stages) {
      for (const block of stage) {
        block.conv1.step(lr, weightDecay);
        block.conv2.step(lr, weightDecay);
      }
    }
    return loss;
  }

  blocksInStage(stage: number): number {
    if (!Number.isInteger(stage) || stage < 0 || stage >= this.stages.length) {
      throw new NonResidualPointError(
        `stage ${stage} is not a residual stage (model has stages 0..${this.stages.length - 1})`,
      );
    }
    return this.stages[stage].length;
  }

  /** Mark one block deleted or restored. */
  setDeleted(stage: number, block: number, deleted: boolean): void {
    const count = this.blocksInStage(stage);
    if (!Number.isInteger(block) || block < 0 || block >= count) {
      throw new ConfigError(`stage ${stage} has blocks 0..${count - 1}, got ${block}`);
    }
    this.stages[stage][block].deleted = deleted;
  }

  restoreAllBlocks(): void {
    for (const stage of this.stages) for (const block of stage) block.deleted = false;
  }

  /** Copy block weights from one slot to another within a stage. */
  copyBlockWeights(stage: number, from: number, to: number): void {
    const count = this.blocksInStage(stage);
    for (const idx of [from, to]) {
      if (!Number.isInteger(idx) || idx < 0 || idx >= count) {
        throw new ConfigError(`stage ${stage} has blocks 0..${count - 1}, got ${idx}`);
      }
    }
    const src = this.stages[stage][from];
    const dst = this.stages[stage][to];
    dst.conv1.w.set(src.conv1.w);
    dst.conv1.b.set(src.conv1.b);
    dst.conv2.w.set(src.conv2.w);
    dst.conv2.b.set(src.conv2.b);
  }

  toJSON(): object {
    return {
      format: "toy-residual-net",
      version: 1,
      arch: this.arch,
      stem: { w: Array.from(this.stem.w), b: Array.from(this.stem.b) },
      stages: this.stages.map((stage) =>
        stage.map((block) => ({
          conv1: { w: Array.from(block.conv1.w), b: Array.from(block.conv1.b) },
          conv2: { w: Array.from(block.conv2.w), b: Array.from(block.conv2.b) },
        })),
      ),
      head: { w: Array.from(this.head.w), b: Array.from(this.head.b) },
    };
  }

  saveCheckpoint(path: string): void {
    writeFileSync(path, JSON.stringify(this.toJSON()));
  }

  static fromJSON(raw: unknown): ResidualNet {
    const obj = raw as Record<string, unknown>;
    if (!obj || obj.format !== "toy-residual-net" || obj.version !== 1) {
      throw new ConfigError("not a toy-residual-net checkpoint");
    }
    const arch = obj.arch as Arch;
    validateArch(arch);
    const net = new ResidualNet(arch, 0);
    const load = (lin: Linear, data: { w: number[]; b: number[] }, label: string): void => {
      if (!data || data.w.length !== lin.w.length || data.b.length !== lin.b.length) {
        throw new ShapeMismatchError(`checkpoint ${label} weights do not match the declared arch`);
      }
      lin.w.set(data.w);
      lin.b.set(data.b);
    };
    load(net.stem, obj.stem as { w: number[]; b: number[] }, "stem");
    const stages = obj.stages as { conv1: { w: number[]; b: number[] }; conv2: { w: number[]; b: number[] } }[][];
    if (!Array.isArray(stages) || stages.length !== net.stages.length) {
      throw new ShapeMismatchError("checkpoint stage count does not match the declared arch");
    }
    for (let s = 0; s < stages.length; s++) {
      if (stages[s].length !== net.stages[s].length) {
        throw new ShapeMismatchError(`checkpoint stage ${s} block count does not match the declared arch`);
      }
      for (let b = 0; b < stages[s].length; b++) {
        load(net.stages[s][b].conv1, stages[s][b].conv1, `s${s}b${b}.conv1`);
        load(net.stages[s][b].conv2, stages[s][b].conv2, `s${s}b${b}.conv2`);
      }
    }
    load(net.head, obj.head as { w: number[]; b: number[] }, "head");
    return net;
  }

  static loadCheckpoint(path: string): ResidualNet {
    let parsed: unknown;
    try {
      parsed = JSON.parse(readFileSync(path, "utf-8"));
    } catch (err) {
      throw new ConfigError(`cannot read checkpoint ${path}: ${(err as Error).message}`);
    }
    return ResidualNet.fromJSON(parsed);
  }

  clone(): ResidualNet {
    return ResidualNet.fromJSON(JSON.parse(JSON.stringify(this.toJSON())));
  }
}

function validateArch(arch: Arch): void {
  if (
    !arch ||
    !Number.isInteger(arch.inChannels) ||
    arch.inChannels < 1 ||
    !Number.isInteger(arch.channels) ||
    arch.channels < 1 ||
    !Number.isInteger(arch.spatial) ||
    arch.spatial < 1 ||
    !Number.isInteger(arch.classes) ||
    arch.classes < 2 ||
    !Array.isArray(arch.stageBlocks) ||
    arch.stageBlocks.length < 1 ||
    arch.stageBlocks.some((n) => !Number.isInteger(n) || n < 1)
  ) {
    throw new ConfigError("invalid architecture");
  }
}
