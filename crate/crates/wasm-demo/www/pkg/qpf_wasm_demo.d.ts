/* tslint:disable */
/* eslint-disable */

/**
 * The bundled five-bus case, so the page has something to start from.
 */
export function bundled_case(): string;

/**
 * Runs HHL on the 2×2 system with eigenvalues `l1`, `l2` (eigenvectors
 * rotated by `angle` radians) and right-hand side (cos φ, sin φ).
 *
 * Returns the clock-register distribution right after phase estimation,
 * the encoded eigenvalues, and the HHL solution next to the direct one.
 */
export function hhl_clock_histogram(l1: number, l2: number, angle: number, phi: number, clock_qubits: number): string;

/**
 * Correlated Monte Carlo over the case's uncertainty block, with the
 * correlation of the first pair overridden by `rho`.
 *
 * Returns per-sample points for a scatter of voltage magnitude at the
 * first two uncertain buses, plus the summary correlations.
 */
export function monte_carlo(case_json: string, samples: number, seed: number, rho: number): string;

/**
 * Solves a native-JSON case and returns the full report, trace included.
 */
export function solve_case(case_json: string, method: string, clock_qubits: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bundled_case: () => [number, number];
    readonly hhl_clock_histogram: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly monte_carlo: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly solve_case: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
