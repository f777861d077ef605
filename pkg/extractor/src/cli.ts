#!/usr/bin/env node
/**
 * udft-extract: dump one activation layer of a layers model to a UDFT file.
 *
 * Usage:
 *   udft-extract --images DIR --layer 47 --model path/model.json --out out.udft
 *                [--layer-name NAME] [--input-size 224] [--batch-size 8]
 *                [--preprocessing caffe|torch]
 *
 * Exit codes: 0 success, 1 usage error, 2 data error.
 */

import { extract } from './extract';
import { LAYER_KEYS } from './layers';

interface Args {
  images?: string;
  layer?: string;
  layerName?: string;
  model?: string;
  out?: string;
  inputSize: number;
  batchSize: number;
  preprocessing: 'caffe' | 'torch';
}

function parseArgs(argv: string[]): Args {
  const args: Args = { inputSize: 224, batchSize: 8, preprocessing: 'caffe' };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new UsageError(`missing value for ${flag}`);
      return argv[i];
    };
    switch (flag) {
      case '--images': args.images = next(); break;
      case '--layer': args.layer = next(); break;
      case '--layer-name': args.layerName = next(); break;
      case '--model': args.model = next(); break;
      case '--out': args.out = next(); break;
      case '--input-size': args.inputSize = parseInt(next(), 10); break;
      case '--batch-size': args.batchSize = parseInt(next(), 10); break;
      case '--preprocessing': {
        const value = next();
        if (value !== 'caffe' && value !== 'torch') throw new UsageError(`bad --preprocessing ${value}`);
        args.preprocessing = value;
        break;
      }
      case '--help':
      case '-h':
        printUsage();
        process.exit(0);
        break;
      default:
        throw new UsageError(`unknown flag ${flag}`);
    }
  }
  return args;
}

class UsageError extends Error {}

function printUsage(): void {
  console.log(
    'usage: udft-extract --images DIR --layer KEY --model MODEL_JSON --out FILE\n' +
      `  --layer KEY          one of: ${LAYER_KEYS.join(', ')}\n` +
      '  --layer-name NAME    use an exact model layer name instead of --layer\n' +
      '  --input-size N       square input edge (default 224)\n' +
      '  --batch-size N       images per forward pass (default 8)\n' +
      '  --preprocessing M    caffe (default) or torch',
  );
}

async function main(): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(process.argv.slice(2));
    for (const [flag, value] of [['--images', args.images], ['--model', args.model], ['--out', args.out]] as const) {
      if (!value) throw new UsageError(`${flag} is required`);
    }
    if (!args.layer && !args.layerName) throw new UsageError('--layer or --layer-name is required');
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`udft-extract: usage error: ${err.message}`);
      printUsage();
      return 1;
    }
    throw err;
  }

  try {
    const result = await extract({
      imageDir: args.images!,
      layer: args.layer ?? null,
      layerName: args.layerName ?? null,
      modelPath: args.model!,
      outPath: args.out!,
      inputSize: args.inputSize,
      batchSize: args.batchSize,
      preprocessing: args.preprocessing,
    });
    console.log(
      `wrote ${args.out}: ${result.written} samples of ` +
        `${result.height}x${result.width}x${result.depth}` +
        (result.skipped.length ? `, skipped ${result.skipped.length}` : ''),
    );
    return 0;
  } catch (err) {
    console.error(`udft-extract: error: ${(err as Error).message}`);
    return 2;
  }
}

main().then((code) => {
  process.exitCode = code;
});
