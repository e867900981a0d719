/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const angle_estimates: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
export const gain_map: (a: bigint, b: number, c: number, d: number) => [number, number, number, number];
export const null_steering: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
