import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";
import { makeClassData } from "../src/data.js";
import { ConfigError, LabelSpaceMismatchError } from "../src/errors.js";
import { exportActivations, exportPredictions } from "../src/export.js";
import { POST_RESIDUAL, PRE_RESIDUAL, ResidualNet, type Arch } from "../src/model.js";
import { walkNaf, walkNpf } from "./util.js";

const arch: Arch = { inChannels: 3, channels: 8, spatial: 4, stageBlocks: [2, 2], classes: 4 };
const tmp = mkdtempSync(join(tmpdir(), "exporter-export-"));
afterAll(() => rmSync(tmp, { recursive: true, force: true }));

const examples = makeClassData(17, 8, arch.inChannels, arch.spatial, arch.classes);

describe("exportActivations", () => {
  it("writes one layer per capture point for a tiny random net", () => {
    const model = new ResidualNet(arch, 0);
    const out = join(tmp, "tiny.naf");
    const summary = exportActivations({ model, examples, out });
    // stem + (pre, post) per block + head.in + head.logits
    expect(summary.layerCount).toBe(1 + 2 * 4 + 2);
    expect(summary.exampleCount).toBe(8);
    const parsed = walkNaf(readFileSync(out));
    expect(parsed.exampleCount).toBe(8);
    expect(parsed.layers.length).toBe(summary.layerCount);
    expect(parsed.layers.map((l) => l.name)).toEqual(summary.layerNames);
  });

  it("is deterministic: same checkpoint and examples give identical bytes", () => {
    const model = new ResidualNet(arch, 1);
    const out1 = join(tmp, "det1.naf");
    const out2 = join(tmp, "det2.naf");
    exportActivations({ model, examples, out: out1 });
    exportActivations({ model, examples, out: out2 });
    expect(readFileSync(out1).equals(readFileSync(out2))).toBe(true);
  });

  it("pooled and flattened feature counts relate by the spatial size", () => {
    const model = new ResidualNet(arch, 2);
    const gapOut = join(tmp, "gap.naf");
    const flatOut = join(tmp, "flat.naf");
    exportActivations({ model, examples, pooling: "globalAveragePool", out: gapOut });
    exportActivations({ model, examples, pooling: "flatten", out: flatOut });
    const gap = walkNaf(readFileSync(gapOut));
    const flat = walkNaf(readFileSync(flatOut));
    expect(gap.layers.length).toBe(flat.layers.length);
    for (let i = 0; i < gap.layers.length; i++) {
      const g = gap.layers[i];
      const f = flat.layers[i];
      if (g.name.endsWith(".gap")) {
        expect(f.name).toBe(g.name.replace(/\.gap$/, ".flat"));
        expect(f.featureCount).toBe(g.featureCount * arch.spatial);
      } else {
        // non-spatial points are identical under either policy
        expect(f.name).toBe(g.name);
        expect(f.featureCount).toBe(g.featureCount);
      }
    }
  });

  it("records the pooling policy in layer names", () => {
    const model = new ResidualNet(arch, 3);
    const out = join(tmp, "names.naf");
    const summary = exportActivations({ model, examples, out });
    expect(summary.layerNames[0]).toBe("stem.gap");
    expect(summary.layerNames).toContain("s1b0.post.gap");
    expect(summary.layerNames).toContain("head.in");
  });

  it("honors capture selection by position and stage", () => {
    const model = new ResidualNet(arch, 3);
    const out = join(tmp, "sel.naf");
    const summary = exportActivations({
      model,
      examples,
      positions: [POST_RESIDUAL],
      stages: [1],
      out,
    });
    expect(summary.layerNames).toEqual(["s1b0.post.gap", "s1b1.post.gap"]);
    expect(() =>
      exportActivations({ model, examples, positions: [PRE_RESIDUAL], stages: [99], out }),
    ).toThrow(ConfigError);
  });

  it("global average pooling averages the spatial axis", () => {
    const model = new ResidualNet(arch, 4);
    const gapOut = join(tmp, "gapcheck.naf");
    const flatOut = join(tmp, "flatcheck.naf");
    exportActivations({ model, examples, pooling: "globalAveragePool", dtype: "f64", out: gapOut });
    exportActivations({ model, examples, pooling: "flatten", dtype: "f64", out: flatOut });
    const g = walkNaf(readFileSync(gapOut)).layers[0];
    const f = walkNaf(readFileSync(flatOut)).layers[0];
    const S = arch.spatial;
    for (let e = 0; e < 8; e++) {
      for (let c = 0; c < g.featureCount; c++) {
        let acc = 0;
        for (let s = 0; s < S; s++) acc += f.values[e * f.featureCount + c * S + s];
        expect(g.values[e * g.featureCount + c]).toBeCloseTo(acc / S, 12);
      }
    }
  });

  it("loads the model from a checkpoint path", () => {
    const model = new ResidualNet(arch, 5);
    const ckpt = join(tmp, "net.json");
    model.saveCheckpoint(ckpt);
    const outMem = join(tmp, "mem.naf");
    const outFile = join(tmp, "file.naf");
    exportActivations({ model, examples, out: outMem });
    exportActivations({ model: ckpt, examples, out: outFile });
    expect(readFileSync(outMem).equals(readFileSync(outFile))).toBe(true);
  });
});

describe("exportPredictions", () => {
  it("writes true labels plus one row per model, in example order", () => {
    const models = [0, 1, 2].map((seed) => ({
      name: `net-${seed}`,
      model: new ResidualNet(arch, seed),
    }));
    const out = join(tmp, "preds.npf");
    exportPredictions(models, examples, out);
    const parsed = walkNpf(readFileSync(out));
    expect(parsed.models.map((m) => m.name)).toEqual(["net-0", "net-1", "net-2"]);
    expect(Array.from(parsed.trueLabels)).toEqual(Array.from(examples.labels));
    expect(Array.from(parsed.models[1].predictions)).toEqual(
      Array.from(models[1].model.predict(examples)),
    );
  });

  it("activation and prediction exports share the example ordering", () => {
    const model = new ResidualNet(arch, 6);
    const nafOut = join(tmp, "order.naf");
    const npfOut = join(tmp, "order.npf");
    exportActivations({ model, examples, dtype: "f64", out: nafOut });
    exportPredictions([{ name: "net", model }], examples, npfOut);
    const naf = walkNaf(readFileSync(nafOut));
    const npf = walkNpf(readFileSync(npfOut));
    const logits = naf.layers.find((l) => l.name === "head.logits")!;
    const K = arch.classes;
    for (let e = 0; e < examples.count; e++) {
      let best = 0;
      for (let k = 1; k < K; k++) {
        if (logits.values[e * K + k] > logits.values[e * K + best]) best = k;
      }
      expect(npf.models[0].predictions[e]).toBe(best);
    }
  });

  it("is deterministic", () => {
    const models = [{ name: "net", model: new ResidualNet(arch, 7) }];
    const out1 = join(tmp, "det1.npf");
    const out2 = join(tmp, "det2.npf");
    exportPredictions(models, examples, out1);
    exportPredictions(models, examples, out2);
    expect(readFileSync(out1).equals(readFileSync(out2))).toBe(true);
  });

  it("rejects models with a different label space", () => {
    const other: Arch = { ...arch, classes: 5 };
    const models = [
      { name: "ok", model: new ResidualNet(arch, 0) },
      { name: "bad", model: new ResidualNet(other, 0) },
    ];
    expect(() => exportPredictions(models, examples, join(tmp, "bad.npf"))).toThrow(
      LabelSpaceMismatchError,
    );
    expect(() => exportPredictions([], examples, join(tmp, "none.npf"))).toThrow(ConfigError);
  });
});
