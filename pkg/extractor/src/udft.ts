/**
 * UDFT container writer/reader.
 *
 * Layout (all integers little-endian): 4-byte magic "UDFT", u32 version=1,
 * u32 N, H, W, D, then one id entry per sample (u16 UTF-8 byte length +
 * bytes), then N*H*W*D float32 values in sample-major C order (sample,
 * row, column, channel). The reader validates magic, version, exact byte
 * counts, and finiteness, matching the consumer pipeline's contract.
 */

import * as fs from 'fs';

const MAGIC = 'UDFT';
const VERSION = 1;

export interface TensorBatch {
  count: number;
  height: number;
  width: number;
  depth: number;
  /** length count*height*width*depth, sample-major C order */
  data: Float32Array;
  sampleIds: string[];
}

export function encodeUdft(batch: TensorBatch): Buffer {
  const { count, height, width, depth, data, sampleIds } = batch;
  for (const dim of [count, height, width, depth]) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new Error(`all dimensions must be positive integers, got ${count}x${height}x${width}x${depth}`);
    }
  }
  const expected = count * height * width * depth;
  if (data.length !== expected) {
    throw new Error(`data length ${data.length} does not match ${count}x${height}x${width}x${depth}`);
  }
  if (sampleIds.length !== count) {
    throw new Error(`expected ${count} sample ids, got ${sampleIds.length}`);
  }
  if (new Set(sampleIds).size !== sampleIds.length) {
    throw new Error('duplicate sample ids');
  }
  const perSample = height * width * depth;
  for (let i = 0; i < count; i++) {
    for (let j = 0; j < perSample; j++) {
      if (!Number.isFinite(data[i * perSample + j])) {
        throw new Error(`non-finite value in sample ${i} (${sampleIds[i]})`);
      }
    }
  }

  const header = Buffer.alloc(4 + 5 * 4);
  header.write(MAGIC, 0, 'ascii');
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(count, 8);
  header.writeUInt32LE(height, 12);
  header.writeUInt32LE(width, 16);
  header.writeUInt32LE(depth, 20);

  const idChunks: Buffer[] = [];
  for (const id of sampleIds) {
    const raw = Buffer.from(id, 'utf-8');
    if (raw.length > 0xffff) {
      throw new Error(`sample id exceeds 65535 UTF-8 bytes: ${id.slice(0, 32)}...`);
    }
    const len = Buffer.alloc(2);
    len.writeUInt16LE(raw.length, 0);
    idChunks.push(len, raw);
  }

  const payload = Buffer.alloc(expected * 4);
  for (let i = 0; i < expected; i++) {
    payload.writeFloatLE(data[i], i * 4);
  }
  return Buffer.concat([header, ...idChunks, payload]);
}

export function writeUdft(batch: TensorBatch, path: string): void {
  fs.writeFileSync(path, encodeUdft(batch));
}

export function readUdft(path: string): TensorBatch {
  const buf = fs.readFileSync(path);
  if (buf.length < 4 || buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`${path}: bad magic ${JSON.stringify(buf.toString('ascii', 0, 4))}, expected "UDFT"`);
  }
  if (buf.length < 24) {
    throw new Error(`${path}: truncated header: file ends after ${buf.length} bytes`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new Error(`${path}: unsupported UDFT version ${version}`);
  }
  const count = buf.readUInt32LE(8);
  const height = buf.readUInt32LE(12);
  const width = buf.readUInt32LE(16);
  const depth = buf.readUInt32LE(20);
  for (const [name, dim] of [['N', count], ['H', height], ['W', width], ['D', depth]] as const) {
    if (dim < 1) throw new Error(`${path}: header field ${name} must be positive, got ${dim}`);
  }

  let offset = 24;
  const sampleIds: string[] = [];
  for (let i = 0; i < count; i++) {
    if (offset + 2 > buf.length) throw new Error(`${path}: truncated id table entry ${i}`);
    const len = buf.readUInt16LE(offset);
    offset += 2;
    if (offset + len > buf.length) throw new Error(`${path}: truncated id table entry ${i}`);
    sampleIds.push(buf.toString('utf-8', offset, offset + len));
    offset += len;
  }

  const values = count * height * width * depth;
  const actual = buf.length - offset;
  if (actual !== values * 4) {
    const kind = actual < values * 4 ? 'truncated' : 'oversized';
    throw new Error(`${path}: ${kind} payload: expected ${values * 4} data bytes, found ${actual}`);
  }
  const data = new Float32Array(values);
  for (let i = 0; i < values; i++) {
    data[i] = buf.readFloatLE(offset + i * 4);
    if (!Number.isFinite(data[i])) {
      const sample = Math.floor(i / (height * width * depth));
      throw new Error(`${path}: non-finite value in sample ${sample} (${sampleIds[sample]})`);
    }
  }
  return { count, height, width, depth, data, sampleIds };
}
