/* tslint:disable */
/* eslint-disable */

/**
 * JSON `{size, window, states, gap, bulk, field}` for the lowest band of the
 * flux `p/q` model on an open `size x size` lattice.
 */
export function hofstadter_marker(p: number, q: number, size: number): string;

/**
 * `|phi_{n,k}|^2` on a `pixels x pixels` image of `[-half_width, half_width]^2`,
 * row-major from the top.
 */
export function landau_density(b: number, n: number, k: number, half_width: number, pixels: number): Float64Array;

/**
 * JSON array of `{k, lambda, lower, upper, radius}` for `k = -n..=k_max`.
 */
export function landau_spectrum(b: number, q: number, n: number, k_max: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly hofstadter_marker: (a: number, b: number, c: number) => [number, number, number, number];
    readonly landau_density: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly landau_spectrum: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
