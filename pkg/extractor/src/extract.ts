/**
 * Batch extraction of a named activation layer into a UDFT container.
 *
 * Images are processed in input order (directory listing sorted by file
 * name); undecodable files are skipped with a warning and excluded from
 * the output. Pooled 2-D layer outputs are stored as 1x1xD maps so the
 * container always carries a spatial layout.
 */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

import { resolveLayer } from './layers';
import { loadModelFromDisk } from './model';
import { Preprocessing, prepareInput } from './preprocess';
import { TensorBatch, writeUdft } from './udft';

const IMAGE_EXTENSIONS = new Set(['.png', '.jpg', '.jpeg']);

export interface ExtractionJob {
  imageDir: string;
  /** table key: one of 42, 44, 45, 47, 48, avg_pool */
  layer: string | null;
  /** escape hatch: exact layer name in the loaded model */
  layerName?: string | null;
  modelPath: string;
  outPath: string;
  inputSize?: number;
  batchSize?: number;
  preprocessing?: Preprocessing;
}

export interface ExtractionResult {
  written: number;
  height: number;
  width: number;
  depth: number;
  skipped: string[];
}

export function listImageFiles(imageDir: string): string[] {
  if (!fs.existsSync(imageDir) || !fs.statSync(imageDir).isDirectory()) {
    throw new Error(`image directory not found: ${imageDir}`);
  }
  return fs
    .readdirSync(imageDir)
    .filter((name) => IMAGE_EXTENSIONS.has(path.extname(name).toLowerCase()))
    .sort();
}

export async function extract(job: ExtractionJob): Promise<ExtractionResult> {
  const inputSize = job.inputSize ?? 224;
  const batchSize = job.batchSize ?? 8;
  const preprocessing = job.preprocessing ?? 'caffe';
  if (batchSize < 1) throw new Error(`batch size must be positive, got ${batchSize}`);

  const model = await loadModelFromDisk(job.modelPath);
  const { layer, expected } = resolveLayer(model, job.layer ?? null, job.layerName ?? null);
  const tap = tf.model({ inputs: model.inputs, outputs: layer.output as tf.SymbolicTensor });

  const files = listImageFiles(job.imageDir);
  const inputs: tf.Tensor3D[] = [];
  const sampleIds: string[] = [];
  const skipped: string[] = [];
  for (const name of files) {
    const raw = fs.readFileSync(path.join(job.imageDir, name));
    try {
      inputs.push(prepareInput(raw, inputSize, preprocessing));
      sampleIds.push(name);
    } catch (err) {
      skipped.push(name);
      console.warn(`skipping ${name}: ${(err as Error).message}`);
    }
  }
  if (inputs.length === 0) {
    throw new Error(`no decodable images in ${job.imageDir}`);
  }

  const chunks: Float32Array[] = [];
  let height = 0;
  let width = 0;
  let depth = 0;
  for (let start = 0; start < inputs.length; start += batchSize) {
    const slice = inputs.slice(start, start + batchSize);
    const output = tf.tidy(() => {
      const batch = tf.stack(slice);
      const raw = tap.predict(batch) as tf.Tensor;
      // pooled heads come out 2-D; store them as 1x1xD maps
      return raw.rank === 2 ? raw.reshape([raw.shape[0] as number, 1, 1, raw.shape[1] as number]) : raw;
    });
    if (output.rank !== 4) {
      output.dispose();
      throw new Error(`layer ${layer.name} has rank-${output.rank} output; expected a 4-D activation map`);
    }
    [, height, width, depth] = output.shape as [number, number, number, number];
    chunks.push((await output.data()) as Float32Array);
    output.dispose();
  }
  inputs.forEach((t) => t.dispose());

  if (expected && (height !== expected.height || width !== expected.width || depth !== expected.depth)) {
    throw new Error(
      `layer ${layer.name} produced ${height}x${width}x${depth}, expected ` +
        `${expected.height}x${expected.width}x${expected.depth}; wrong model or layer mapping`,
    );
  }

  const perSample = height * width * depth;
  const data = new Float32Array(sampleIds.length * perSample);
  let offset = 0;
  for (const chunk of chunks) {
    data.set(chunk, offset);
    offset += chunk.length;
  }

  const batch: TensorBatch = {
    count: sampleIds.length,
    height,
    width,
    depth,
    data,
    sampleIds,
  };
  writeUdft(batch, job.outPath);
  return { written: sampleIds.length, height, width, depth, skipped };
}
