/**
 * Named activation taps on ResNet-50 and their expected output shapes.
 *
 * The numeric keys index the ReLU activations of the network counted from
 * the stem: the final bottleneck stage contributes, per block, two
 * 512-channel 7x7 ReLUs followed by a 2048-channel block output, which
 * places the five 7x7x512 taps at 42, 44, 45, 47 and 48. `avg_pool` is
 * the 2048-wide globally pooled head input, stored as a 1x1x2048 map.
 *
 * Key -> layer-name resolution tries the modern Keras ResNet-50 names
 * first and the legacy `activation_N` names second; models exported with
 * other naming schemes can bypass the table with an explicit layer name.
 */

import type * as tf from '@tensorflow/tfjs';

export interface LayerSpec {
  /** modern Keras ResNet-50 layer name */
  kerasName: string;
  /** pre-2.x Keras fallback name */
  legacyName: string;
  height: number;
  width: number;
  depth: number;
}

export const LAYER_TABLE: Record<string, LayerSpec> = {
  '42': { kerasName: 'conv5_block1_2_relu', legacyName: 'activation_42', height: 7, width: 7, depth: 512 },
  '44': { kerasName: 'conv5_block2_1_relu', legacyName: 'activation_44', height: 7, width: 7, depth: 512 },
  '45': { kerasName: 'conv5_block2_2_relu', legacyName: 'activation_45', height: 7, width: 7, depth: 512 },
  '47': { kerasName: 'conv5_block3_1_relu', legacyName: 'activation_47', height: 7, width: 7, depth: 512 },
  '48': { kerasName: 'conv5_block3_2_relu', legacyName: 'activation_48', height: 7, width: 7, depth: 512 },
  avg_pool: { kerasName: 'avg_pool', legacyName: 'avg_pool', height: 1, width: 1, depth: 2048 },
};

export const LAYER_KEYS = Object.keys(LAYER_TABLE);

export interface ResolvedLayer {
  layer: tf.layers.Layer;
  /** null when an explicit layer name bypassed the table */
  expected: LayerSpec | null;
}

export function resolveLayer(
  model: tf.LayersModel,
  layerKey: string | null,
  explicitName: string | null,
): ResolvedLayer {
  if (explicitName) {
    return { layer: getLayerOrThrow(model, [explicitName]), expected: null };
  }
  if (!layerKey || !(layerKey in LAYER_TABLE)) {
    throw new Error(`unknown layer ${JSON.stringify(layerKey)}; expected one of ${LAYER_KEYS.join(', ')}`);
  }
  const spec = LAYER_TABLE[layerKey];
  return { layer: getLayerOrThrow(model, [spec.kerasName, spec.legacyName]), expected: spec };
}

function getLayerOrThrow(model: tf.LayersModel, candidates: string[]): tf.layers.Layer {
  for (const name of candidates) {
    try {
      return model.getLayer(name);
    } catch {
      // try the next candidate name
    }
  }
  const available = model.layers.map((l) => l.name).join(', ');
  throw new Error(`model has no layer named ${candidates.join(' or ')}; available: ${available}`);
}
