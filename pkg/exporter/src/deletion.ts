import { writeFileSync } from "node:fs";
import type { ExampleBatch } from "./data.js";
import { ConfigError } from "./errors.js";
import { ResidualNet } from "./model.js";

export interface DeletionPoint {
  blocksDeleted: number;
  accuracy: number;
}

/**
 * Residual-block-deletion experiment: delete the stage's blocks
 * backwards one by one, evaluating test accuracy after each deletion.
 * Deleting a block zeroes its transform branch, so the skip connection
 * carries the identity and the rest of the network is untouched. Row 0
 * is always the intact model; the model is restored before returning.
 */
export function deleteBlocksAndEvaluate(
  model: string | ResidualNet,
  examples: ExampleBatch,
  stage: number,
  deleteCount: number,
  csvOut?: string,
): DeletionPoint[] {
  const net = typeof model === "string" ? ResidualNet.loadCheckpoint(model) : model;
  const blocks = net.blocksInStage(stage);
  if (!Number.isInteger(deleteCount) || deleteCount < 0 || deleteCount >= blocks) {
    throw new ConfigError(
      `deleteCount must be in 0..${blocks - 1} for a ${blocks}-block stage, got ${deleteCount}`,
    );
  }

  const curve: DeletionPoint[] = [];
  try {
    curve.push({ blocksDeleted: 0, accuracy: net.accuracy(examples) });
    for (let d = 1; d <= deleteCount; d++) {
      net.setDeleted(stage, blocks - d, true);
      curve.push({ blocksDeleted: d, accuracy: net.accuracy(examples) });
    }
  } finally {
    net.restoreAllBlocks();
  }

  if (csvOut !== undefined) {
    const lines = ["blocksDeleted,accuracy"];
    for (const point of curve) lines.push(`${point.blocksDeleted},${point.accuracy}`);
    writeFileSync(csvOut, lines.join("\n") + "\n");
  }
  return curve;
}
