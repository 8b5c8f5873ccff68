/* tslint:disable */
/* eslint-disable */

/**
 * Log-Sobolev constant along the OU flow `dX = −κX dt + √2σ dW` from
 * `N(0, v₀)`: `samples + 1` triples `[t, bound, half the exact variance]`.
 */
export function bakry_emery_curve(kappa: number, v0: number, sigma: number, t_end: number, samples: number): Float64Array;

/**
 * `[grid, exact]` relative entropy of `N(shift, variance)` with respect to
 * `N(0, 1)` on a 1-D grid over `[−10, 10]`.
 */
export function gaussian_kl(shift: number, variance: number, cells: number): Float64Array;

/**
 * Two point vortices in quadratic confinement, integrated with RK4.
 * Returns `[x₁, y₁, x₂, y₂]` at `samples + 1` evenly spaced times.
 */
export function two_vortex_orbit(kappa: number, strength: number, t_end: number, dt: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bakry_emery_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly gaussian_kl: (a: number, b: number, c: number) => [number, number, number, number];
    readonly two_vortex_orbit: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
