/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_closedform_free: (a: number, b: number) => void;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const __wbg_trajectory_free: (a: number, b: number) => void;
export const closed_form: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const closedform_energy: (a: number) => [number, number];
export const closedform_first: (a: number) => [number, number];
export const closedform_t: (a: number) => [number, number];
export const closedform_tau: (a: number) => [number, number];
export const closedform_total: (a: number) => [number, number];
export const simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const simulation_energy: (a: number) => [number, number];
export const simulation_first: (a: number) => [number, number];
export const simulation_max_defect: (a: number) => number;
export const simulation_spectrum: (a: number) => [number, number];
export const simulation_steps: (a: number) => number;
export const simulation_t: (a: number) => [number, number];
export const simulation_total: (a: number) => [number, number];
export const trajectory: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const trajectory_gamma: (a: number) => [number, number];
export const trajectory_length: (a: number) => [number, number];
export const trajectory_period: (a: number) => number;
export const trajectory_speed: (a: number) => number;
export const trajectory_t: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
