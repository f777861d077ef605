/**
 * Disk IO for layers models without the native tfjs-node bindings.
 *
 * Reads/writes the standard tfjs artifact pair: a model.json holding the
 * topology plus a weights manifest, and binary weight shards next to it.
 * A ResNet-50 exported with the tfjs converter loads directly.
 */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

export function fileLoadHandler(modelJsonPath: string): tf.io.IOHandler {
  return {
    load: async (): Promise<tf.io.ModelArtifacts> => {
      const dir = path.dirname(modelJsonPath);
      const json = JSON.parse(fs.readFileSync(modelJsonPath, 'utf-8'));
      const weightSpecs: tf.io.WeightsManifestEntry[] = [];
      const shards: Buffer[] = [];
      for (const group of json.weightsManifest ?? []) {
        weightSpecs.push(...group.weights);
        for (const shard of group.paths) {
          shards.push(fs.readFileSync(path.join(dir, shard)));
        }
      }
      const concatenated = Buffer.concat(shards);
      const weightData = concatenated.buffer.slice(
        concatenated.byteOffset,
        concatenated.byteOffset + concatenated.byteLength,
      );
      return {
        modelTopology: json.modelTopology,
        format: json.format,
        generatedBy: json.generatedBy,
        convertedBy: json.convertedBy,
        weightSpecs,
        weightData,
      };
    },
  };
}

export function fileSaveHandler(dir: string): tf.io.IOHandler {
  return {
    save: async (artifacts: tf.io.ModelArtifacts): Promise<tf.io.SaveResult> => {
      fs.mkdirSync(dir, { recursive: true });
      const weightData = artifacts.weightData as ArrayBuffer;
      fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData));
      const json = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: artifacts.convertedBy ?? null,
        weightsManifest: [{ paths: ['weights.bin'], weights: artifacts.weightSpecs }],
      };
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(json));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON',
        },
      };
    },
  };
}

export async function loadModelFromDisk(modelJsonPath: string): Promise<tf.LayersModel> {
  if (!fs.existsSync(modelJsonPath)) {
    throw new Error(`model file not found: ${modelJsonPath}`);
  }
  return tf.loadLayersModel(fileLoadHandler(modelJsonPath));
}

export async function saveModelToDisk(model: tf.LayersModel, dir: string): Promise<string> {
  await model.save(fileSaveHandler(dir));
  return path.join(dir, 'model.json');
}
