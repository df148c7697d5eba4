//! Separable resampling with half-pixel centers.
//!
//! Output sample `i` maps to input coordinate `(i + 0.5) * in / out - 0.5`;
//! taps outside the image are clamped to the border.

use super::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ResampleFilter {
    Nearest,
    #[default]
    Bilinear,
    Bicubic,
}

/// Catmull-Rom style cubic with a = -0.5.
fn cubic(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Per output index, the `(input index, weight)` taps along one axis.
fn axis_taps(input: usize, output: usize, filter: ResampleFilter) -> Vec<Vec<(usize, f64)>> {
    let scale = input as f64 / output as f64;
    let last = input as isize - 1;
    let clamp = |i: isize| i.clamp(0, last) as usize;
    (0..output)
        .map(|i| {
            let center = (i as f64 + 0.5) * scale;
            match filter {
                ResampleFilter::Nearest => vec![(clamp(center.floor() as isize), 1.0)],
                ResampleFilter::Bilinear => {
                    let x = (center - 0.5).clamp(0.0, last as f64);
                    let x0 = x.floor();
                    let t = x - x0;
                    let x0 = x0 as isize;
                    if t == 0.0 {
                        vec![(clamp(x0), 1.0)]
                    } else {
                        vec![(clamp(x0), 1.0 - t), (clamp(x0 + 1), t)]
                    }
                }
                ResampleFilter::Bicubic => {
                    let x = center - 0.5;
                    let x0 = x.floor();
                    let t = x - x0;
                    let x0 = x0 as isize;
                    (-1..=2).map(|k| (clamp(x0 + k), cubic(t - k as f64))).collect()
                }
            }
        })
        .collect()
}

pub fn resize(img: &Image, out_h: usize, out_w: usize, filter: ResampleFilter) -> Image {
    assert!(out_h >= 1 && out_w >= 1, "resize target must be at least 1x1");
    let (h, w) = (img.height(), img.width());
    let xtaps = axis_taps(w, out_w, filter);
    let ytaps = axis_taps(h, out_h, filter);
    let planes: Vec<Vec<f64>> = img
        .planes()
        .iter()
        .map(|plane| {
            let mut horiz = vec![0.0; h * out_w];
            for y in 0..h {
                let src = &plane[y * w..(y + 1) * w];
                for (x, taps) in xtaps.iter().enumerate() {
                    horiz[y * out_w + x] = taps.iter().map(|&(i, k)| k * src[i]).sum();
                }
            }
            let mut out = vec![0.0; out_h * out_w];
            for (y, taps) in ytaps.iter().enumerate() {
                let dst = &mut out[y * out_w..(y + 1) * out_w];
                for &(i, k) in taps {
                    let src = &horiz[i * out_w..(i + 1) * out_w];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += k * s;
                    }
                }
            }
            out
        })
        .collect();
    Image::from_planes(out_h, out_w, &planes).expect("planes sized by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [ResampleFilter; 3] =
        [ResampleFilter::Nearest, ResampleFilter::Bilinear, ResampleFilter::Bicubic];

    /// Direct 2-D bilinear evaluation of the half-pixel formula.
    fn bilinear_oracle(img: &Image, out_h: usize, out_w: usize) -> Vec<f64> {
        let (h, w) = (img.height() as f64, img.width() as f64);
        let mut out = Vec::new();
        for i in 0..out_h {
            for j in 0..out_w {
                let y = ((i as f64 + 0.5) * h / out_h as f64 - 0.5).clamp(0.0, h - 1.0);
                let x = ((j as f64 + 0.5) * w / out_w as f64 - 0.5).clamp(0.0, w - 1.0);
                let (y0, x0) = (y.floor() as usize, x.floor() as usize);
                let (y1, x1) = ((y0 + 1).min(img.height() - 1), (x0 + 1).min(img.width() - 1));
                let (ty, tx) = (y - y0 as f64, x - x0 as f64);
                let p = |yy: usize, xx: usize| f64::from(img.get(yy, xx, 0));
                out.push(
                    (1.0 - ty) * ((1.0 - tx) * p(y0, x0) + tx * p(y0, x1))
                        + ty * ((1.0 - tx) * p(y1, x0) + tx * p(y1, x1)),
                );
            }
        }
        out
    }

    #[test]
    fn bilinear_row_upsample() {
        // exact values 0, 2.5, 7.5, 10
        let row = Image::new(1, 2, 1, vec![0, 10]).unwrap();
        let up = resize(&row, 1, 4, ResampleFilter::Bilinear);
        assert_eq!(up.pixels(), &[0, 3, 8, 10]);
        assert_eq!(bilinear_oracle(&row, 1, 4), vec![0.0, 2.5, 7.5, 10.0]);
    }

    #[test]
    fn nearest_and_bicubic_on_ramp() {
        let row = Image::new(1, 4, 1, vec![0, 40, 80, 120]).unwrap();
        assert_eq!(resize(&row, 1, 2, ResampleFilter::Nearest).pixels(), &[40, 120]);
        // cubic interpolation reproduces linear ramps where no tap is clamped
        let up = resize(&row, 1, 8, ResampleFilter::Bicubic);
        assert_eq!(&up.pixels()[3..5], &[50, 70]);
    }

    proptest! {
        #[test]
        fn identity_resize_is_exact(h in 1usize..10, w in 1usize..10, seed in any::<u32>()) {
            let pixels: Vec<u8> = (0..h * w * 3).map(|i| (seed as usize).wrapping_mul(2654435761).wrapping_add(i * 977) as u8).collect();
            let img = Image::new(h, w, 3, pixels).unwrap();
            for f in ALL {
                prop_assert_eq!(&resize(&img, h, w, f), &img);
            }
        }

        #[test]
        fn constant_images_stay_constant(v in any::<u8>(), h in 1usize..7, w in 1usize..7, oh in 1usize..12, ow in 1usize..12) {
            let img = Image::filled(h, w, 1, v).unwrap();
            for f in ALL {
                prop_assert!(resize(&img, oh, ow, f).pixels().iter().all(|&p| p == v));
            }
        }

        #[test]
        fn separable_bilinear_matches_direct_formula(h in 1usize..7, w in 1usize..7, oh in 1usize..12, ow in 1usize..12, seed in any::<u32>()) {
            let pixels: Vec<u8> = (0..h * w).map(|i| (seed as usize).wrapping_mul(40503).wrapping_add(i * 7919) as u8).collect();
            let img = Image::new(h, w, 1, pixels).unwrap();
            let got = resize(&img, oh, ow, ResampleFilter::Bilinear);
            for (g, want) in got.pixels().iter().zip(bilinear_oracle(&img, oh, ow)) {
                prop_assert!((f64::from(*g) - want).abs() <= 0.5 + 1e-9);
            }
        }
    }
}
