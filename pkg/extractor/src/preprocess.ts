/**
 * Image decoding and deterministic model-input preprocessing.
 *
 * Images are decoded in pure JS (PNG via pngjs, JPEG via jpeg-js),
 * bilinearly resized straight to the square input size (no crop), and
 * normalized per channel. Two normalization modes are supported:
 *
 *   caffe  BGR order, per-channel mean subtraction on the 0..255 scale.
 *          Matches common Keras ResNet-50 exports; the default.
 *   torch  RGB scaled to 0..1, then (x - mean) / std per channel.
 */

import * as tf from '@tensorflow/tfjs';
import * as jpeg from 'jpeg-js';
import { PNG } from 'pngjs';

export type Preprocessing = 'caffe' | 'torch';

export interface DecodedImage {
  width: number;
  height: number;
  /** RGBA, 8 bits per channel */
  data: Uint8Array;
}

const CAFFE_MEAN_BGR = [103.939, 116.779, 123.68];
const TORCH_MEAN_RGB = [0.485, 0.456, 0.406];
const TORCH_STD_RGB = [0.229, 0.224, 0.225];

export function decodeImage(buf: Buffer): DecodedImage {
  if (buf.length >= 8 && buf.readUInt32BE(0) === 0x89504e47) {
    const png = PNG.sync.read(buf);
    return { width: png.width, height: png.height, data: new Uint8Array(png.data) };
  }
  if (buf.length >= 2 && buf[0] === 0xff && buf[1] === 0xd8) {
    const decoded = jpeg.decode(buf, { useTArray: true, formatAsRGBA: true });
    return { width: decoded.width, height: decoded.height, data: decoded.data };
  }
  throw new Error('unsupported image format (expected PNG or JPEG)');
}

/** RGBA bytes -> float32 RGB tensor of shape [height, width, 3], values 0..255. */
export function toRgbTensor(image: DecodedImage): tf.Tensor3D {
  const { width, height, data } = image;
  const rgb = new Float32Array(width * height * 3);
  for (let p = 0; p < width * height; p++) {
    rgb[p * 3] = data[p * 4];
    rgb[p * 3 + 1] = data[p * 4 + 1];
    rgb[p * 3 + 2] = data[p * 4 + 2];
  }
  return tf.tensor3d(rgb, [height, width, 3]);
}

/** Decode + resize + normalize a single image into a [size, size, 3] tensor. */
export function prepareInput(buf: Buffer, size: number, mode: Preprocessing): tf.Tensor3D {
  return tf.tidy(() => {
    const rgb = toRgbTensor(decodeImage(buf));
    const resized = tf.image.resizeBilinear(rgb, [size, size]);
    if (mode === 'caffe') {
      const bgr = tf.reverse(resized, -1);
      return bgr.sub(tf.tensor1d(CAFFE_MEAN_BGR)) as tf.Tensor3D;
    }
    const scaled = resized.div(255.0);
    return scaled.sub(tf.tensor1d(TORCH_MEAN_RGB)).div(tf.tensor1d(TORCH_STD_RGB)) as tf.Tensor3D;
  });
}
