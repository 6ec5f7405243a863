/* tslint:disable */
/* eslint-disable */

/**
 * Converse bound for a builtin family; `m` is ignored by exact and circular.
 */
export function converse(kind: string, k: number, m: number, servers: number): string;

/**
 * Normalized bound of exact search for `K = 2..=k_max`, one series per entry of `servers` (e.g. `"2,3,5"`).
 */
export function figure1(k_max: number, servers: string): string;

/**
 * Arc-triple scan of the circular family, with the members of the highlighted arcs.
 */
export function prop5(k: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly converse: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly figure1: (a: number, b: number, c: number) => [number, number, number, number];
    readonly prop5: (a: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
