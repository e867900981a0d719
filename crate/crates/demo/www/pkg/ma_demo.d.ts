/* tslint:disable */
/* eslint-disable */

/**
 * JSON of [`ops::AngleEstimates`].
 */
export function angle_estimates(antennas: number, length: number, u: number, snr_db: number, trials: number, seed: bigint): string;

/**
 * JSON of [`ops::GainMap`].
 */
export function gain_map(seed: bigint, paths: number, side: number, step: number): string;

/**
 * JSON of [`ops::BeamPattern`].
 */
export function null_steering(antennas: number, length: number, main_deg: number, nulls_deg: Float64Array, step_deg: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly angle_estimates: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly gain_map: (a: bigint, b: number, c: number, d: number) => [number, number, number, number];
    readonly null_steering: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
