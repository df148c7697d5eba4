/* tslint:disable */
/* eslint-disable */

/**
 * Two-dimensional features and centers trained by gradient descent on the
 * intra term alone (center loss) or with the inter-center repulsion added.
 */
export class CenterToy {
    free(): void;
    [Symbol.dispose](): void;
    centers(): Float64Array;
    /**
     * Mean cosine distance over center pairs.
     */
    dCenters(): number;
    /**
     * Interleaved `x, y` coordinates.
     */
    features(): Float64Array;
    labels(): Uint32Array;
    constructor(identities: number, per_identity: number, seed: number, repel: boolean);
    /**
     * One gradient step on features and centers; returns the loss before it.
     */
    step(lr: number): number;
}

export class Picture {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    blurred(sigma: number): Picture;
    /**
     * Down-up resampled counterpart, as generated for a sharp image.
     */
    downsampled(seed: number): Picture;
    /**
     * Unsharp-masked counterpart, as generated for a blurry image.
     */
    enhanced(): Picture;
    /**
     * Wraps canvas `ImageData` bytes; alpha is dropped.
     */
    static fromRgba(width: number, height: number, rgba: Uint8Array): Picture;
    height(): number;
    rgba(): Uint8Array;
    sharpness(): number;
    /**
     * Spectrum image, same size as the picture.
     */
    spectrumRgba(): Uint8Array;
    /**
     * Procedural pedestrian `index` of `identity`, optionally degraded by blur.
     */
    static synthetic(identity: number, index: number, seed: number, degraded: boolean): Picture;
    width(): number;
}

/**
 * The factor `downsampled(seed)` resamples by.
 */
export function downsampleFactor(seed: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_centertoy_free: (a: number, b: number) => void;
    readonly __wbg_picture_free: (a: number, b: number) => void;
    readonly centertoy_centers: (a: number) => [number, number];
    readonly centertoy_dCenters: (a: number) => number;
    readonly centertoy_features: (a: number) => [number, number];
    readonly centertoy_labels: (a: number) => [number, number];
    readonly centertoy_new: (a: number, b: number, c: number, d: number) => number;
    readonly centertoy_step: (a: number, b: number) => number;
    readonly downsampleFactor: (a: number) => number;
    readonly picture_blurred: (a: number, b: number) => number;
    readonly picture_downsampled: (a: number, b: number) => number;
    readonly picture_enhanced: (a: number) => number;
    readonly picture_fromRgba: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly picture_height: (a: number) => number;
    readonly picture_rgba: (a: number) => [number, number];
    readonly picture_sharpness: (a: number) => number;
    readonly picture_spectrumRgba: (a: number) => [number, number];
    readonly picture_synthetic: (a: number, b: number, c: number, d: number) => number;
    readonly picture_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
