/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_centertoy_free: (a: number, b: number) => void;
export const __wbg_picture_free: (a: number, b: number) => void;
export const centertoy_centers: (a: number) => [number, number];
export const centertoy_dCenters: (a: number) => number;
export const centertoy_features: (a: number) => [number, number];
export const centertoy_labels: (a: number) => [number, number];
export const centertoy_new: (a: number, b: number, c: number, d: number) => number;
export const centertoy_step: (a: number, b: number) => number;
export const downsampleFactor: (a: number) => number;
export const picture_blurred: (a: number, b: number) => number;
export const picture_downsampled: (a: number, b: number) => number;
export const picture_enhanced: (a: number) => number;
export const picture_fromRgba: (a: number, b: number, c: number, d: number) => [number, number, number];
export const picture_height: (a: number) => number;
export const picture_rgba: (a: number) => [number, number];
export const picture_sharpness: (a: number) => number;
export const picture_spectrumRgba: (a: number) => [number, number];
export const picture_synthetic: (a: number, b: number, c: number, d: number) => number;
export const picture_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
