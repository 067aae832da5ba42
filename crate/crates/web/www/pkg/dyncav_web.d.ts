/* tslint:disable */
/* eslint-disable */

export class ClosedForm {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly energy: Float64Array;
    readonly first: Float64Array;
    readonly t: Float64Array;
    readonly tau: Float64Array;
    readonly total: Float64Array;
}

export class Simulation {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly energy: Float64Array;
    /**
     * Particle number in mode 1 at each sample.
     */
    readonly first: Float64Array;
    readonly max_defect: number;
    /**
     * Final `N_k`, `k = 1..k_max`.
     */
    readonly spectrum: Float64Array;
    readonly steps: number;
    readonly t: Float64Array;
    /**
     * Total particle number at each sample.
     */
    readonly total: Float64Array;
}

export class Trajectory {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly gamma: Float64Array;
    readonly length: Float64Array;
    readonly period: number;
    /**
     * Largest wall speed in units of c.
     */
    readonly speed: number;
    readonly t: Float64Array;
}

/**
 * Resonant small-amplitude curves for `N`, `N₁` and `E`.
 */
export function closed_form(kind: number, l0: number, epsilon: number, true_resonance: boolean, t_max: number, samples: number): ClosedForm;

/**
 * Integrate from the vacuum and sample `samples` points up to `t_max`.
 */
export function simulate(kind: number, l0: number, epsilon: number, n: number, true_resonance: boolean, k_max: number, t_max: number, samples: number): Simulation;

/**
 * `l(t)` and `γ(t) = l̇/l` over `periods` drive periods.
 */
export function trajectory(kind: number, l0: number, epsilon: number, n: number, true_resonance: boolean, periods: number, samples: number): Trajectory;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_closedform_free: (a: number, b: number) => void;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly __wbg_trajectory_free: (a: number, b: number) => void;
    readonly closed_form: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly closedform_energy: (a: number) => [number, number];
    readonly closedform_first: (a: number) => [number, number];
    readonly closedform_t: (a: number) => [number, number];
    readonly closedform_tau: (a: number) => [number, number];
    readonly closedform_total: (a: number) => [number, number];
    readonly simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly simulation_energy: (a: number) => [number, number];
    readonly simulation_first: (a: number) => [number, number];
    readonly simulation_max_defect: (a: number) => number;
    readonly simulation_spectrum: (a: number) => [number, number];
    readonly simulation_steps: (a: number) => number;
    readonly simulation_t: (a: number) => [number, number];
    readonly simulation_total: (a: number) => [number, number];
    readonly trajectory: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly trajectory_gamma: (a: number) => [number, number];
    readonly trajectory_length: (a: number) => [number, number];
    readonly trajectory_period: (a: number) => number;
    readonly trajectory_speed: (a: number) => number;
    readonly trajectory_t: (a: number) => [number, number];
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
