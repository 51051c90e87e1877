/**
 * Toy-scale end-to-end export run.
 *
 * Trains a small residual net on synthetic data, dumps activations
 * (NAF1) and a five-model prediction ensemble (NPF1), and runs the
 * block-deletion experiment. The dumps are meant to be fed to the
 * repsim CLI afterwards; the matching commands are printed at the end.
 */
import { mkdirSync } from "node:fs";
import { join } from "node:path";
import { makeClassData, splitExamples, takeExamples } from "./data.js";
import { deleteBlocksAndEvaluate } from "./deletion.js";
import { exportActivations, exportPredictions } from "./export.js";
import { ResidualNet, type Arch } from "./model.js";
import { trainToy } from "./train.js";

const outDir = join(process.cwd(), "out");
mkdirSync(outDir, { recursive: true });

const arch: Arch = {
  inChannels: 3,
  channels: 12,
  spatial: 16,
  stageBlocks: [3, 3],
  classes: 4,
};

// train and test must come from one pool so they share the class means
const pool = makeClassData(1001, 1024, arch.inChannels, arch.spatial, arch.classes);
const { train, test } = splitExamples(pool, 512);

console.log("training 5 toy residual nets (seeds 0..4)");
const models = [];
for (let seed = 0; seed < 5; seed++) {
  const model = new ResidualNet(arch, seed);
  const losses = trainToy(model, train, {
    epochs: 20, lr: 0.1, batchSize: 32, seed: 100 + seed, weightDecay: 0.05,
  });
  const acc = model.accuracy(test);
  console.log(
    `  seed ${seed}: loss ${losses[0].toFixed(3)} -> ${losses[losses.length - 1].toFixed(3)}, ` +
      `test accuracy ${acc.toFixed(3)}`,
  );
  models.push({ name: `net-${seed}`, model });
}

const exportExamples = takeExamples(test, 256);
const nafPath = join(outDir, "toy_acts.naf");
const summary = exportActivations({ model: models[0].model, examples: exportExamples, out: nafPath });
console.log(`wrote ${summary.layerCount} layers x ${summary.exampleCount} examples to ${summary.path}`);

const npfPath = join(outDir, "toy_preds.npf");
exportPredictions(models, exportExamples, npfPath);
console.log(`wrote ${models.length}-model prediction ensemble to ${npfPath}`);

const curvePath = join(outDir, "deletion_stage1.csv");
const curve = deleteBlocksAndEvaluate(models[0].model, test, 1, arch.stageBlocks[1] - 1, curvePath);
console.log("block deletion in stage 1:");
for (const point of curve) {
  console.log(`  ${point.blocksDeleted} deleted: accuracy ${point.accuracy.toFixed(3)}`);
}

console.log("\nanalyze the dumps with:");
console.log(`  repsim heatmap --input ${nafPath} --mode full --out ${join(outDir, "heatmap.csv")}`);
console.log(`  repsim blocks --heatmap ${join(outDir, "heatmap.csv")} --min-size 3`);
console.log(`  repsim probe --input ${nafPath} --labels ${npfPath}`);
