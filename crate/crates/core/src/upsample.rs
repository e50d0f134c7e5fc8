//! Feature-map scaling operators and the last-layer simulator.
//!
//! A generator's final upsampling step is modelled as a 2x scaling
//! (zero insertion, nearest or bilinear) followed by `Y` "same" convolutions
//! with a fixed `Z`x`Z` kernel. Configurations are written as `X.Y.Z`
//! codes, e.g. `N.1.5` is nearest scaling plus one 5x5 convolution block.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::downsample2;
use crate::{Error, GrayImage, Result};

/// Inserts a zero between every row and every column.
pub fn zero_insert(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    let mut out = vec![0.0; 4 * w * h];
    for y in 0..h {
        for x in 0..w {
            out[(2 * y) * (2 * w) + 2 * x] = img.get(x, y);
        }
    }
    GrayImage::from_parts(2 * w, 2 * h, out)
}

/// Pixel replication: `out[y][x] = img[y / 2][x / 2]`.
pub fn nearest_upsample(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(4 * w * h);
    for y in 0..2 * h {
        let row = img.row(y / 2);
        for x in 0..2 * w {
            out.push(row[x / 2]);
        }
    }
    GrayImage::from_parts(2 * w, 2 * h, out)
}

// Source index pair and weight of the second sample for output coordinate
// `i` under half-pixel centers, clamped to the edge.
fn bilinear_taps(len: usize) -> Vec<(usize, usize, f64)> {
    (0..2 * len)
        .map(|i| {
            let s = ((i as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, (len - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// 2x bilinear interpolation with half-pixel centers and edge clamping.
pub fn bilinear_upsample(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    let xs = bilinear_taps(w);
    let ys = bilinear_taps(h);
    let mut out = Vec::with_capacity(4 * w * h);
    for &(y0, y1, ty) in &ys {
        let (r0, r1) = (img.row(y0), img.row(y1));
        for &(x0, x1, tx) in &xs {
            let top = r0[x0] * (1.0 - tx) + r0[x1] * tx;
            let bottom = r1[x0] * (1.0 - tx) + r1[x1] * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    GrayImage::from_parts(2 * w, 2 * h, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelKind {
    Identity,
    Box,
    Gaussian { sigma: f64 },
}

impl Default for KernelKind {
    fn default() -> Self {
        KernelKind::Gaussian { sigma: 1.0 }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Identity => f.write_str("identity"),
            KernelKind::Box => f.write_str("box"),
            KernelKind::Gaussian { sigma } => write!(f, "gaussian({sigma})"),
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    /// Accepts `identity`, `box`, `gaussian` or `gaussian:<sigma>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::Parse {
            code: s.to_string(),
            field: "kernel",
            reason,
        };
        match s.split_once(':') {
            None => match s {
                "identity" => Ok(KernelKind::Identity),
                "box" => Ok(KernelKind::Box),
                "gaussian" => Ok(KernelKind::default()),
                _ => Err(bad(
                    "expected identity, box, gaussian or gaussian:<sigma>".into()
                )),
            },
            Some(("gaussian", sigma)) => {
                let sigma: f64 = sigma
                    .parse()
                    .map_err(|_| bad(format!("bad sigma {sigma:?}")))?;
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(bad("sigma must be positive".into()));
                }
                Ok(KernelKind::Gaussian { sigma })
            }
            Some(_) => Err(bad("only gaussian takes a parameter".into())),
        }
    }
}

/// Square convolution kernel of odd size, row-major weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "kernel size must be odd, got {size}"
            )));
        }
        if weights.len() != size * size {
            return Err(Error::Dimension(format!(
                "{size}x{size} kernel needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Validation("non-finite kernel weight".into()));
        }
        Ok(Self { size, weights })
    }

    pub fn build(kind: KernelKind, size: usize) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "kernel size must be odd, got {size}"
            )));
        }
        let c = (size / 2) as f64;
        let weights = match kind {
            KernelKind::Identity => {
                let mut w = vec![0.0; size * size];
                w[(size / 2) * size + size / 2] = 1.0;
                w
            }
            KernelKind::Box => vec![1.0 / (size * size) as f64; size * size],
            KernelKind::Gaussian { sigma } => {
                let mut w: Vec<f64> = (0..size * size)
                    .map(|i| {
                        let dx = (i % size) as f64 - c;
                        let dy = (i / size) as f64 - c;
                        (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
                    })
                    .collect();
                let total: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= total);
                w
            }
        };
        Self::new(size, weights)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.weights[row * self.size + col]
    }
}

/// "Same" 2D convolution with zero padding outside the image.
///
/// `out[y][x] = sum img[y + dy][x + dx] * k[c - dy][c - dx]` over the
/// kernel support, where `c` is the kernel center.
pub fn convolve2d(img: &GrayImage, kernel: &Kernel) -> GrayImage {
    let (w, h) = img.dims();
    let size = kernel.size;
    let c = (size / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for ky in 0..size as isize {
                let sy = y + c - ky;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                let row = img.row(sy as usize);
                for kx in 0..size as isize {
                    let sx = x + c - kx;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    acc += row[sx as usize] * kernel.get(kx as usize, ky as usize);
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    GrayImage::from_parts(w, h, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    ZeroInsert,
    Nearest,
    Bilinear,
}

impl Scaling {
    pub fn letter(self) -> char {
        match self {
            Scaling::ZeroInsert => 'Z',
            Scaling::Nearest => 'N',
            Scaling::Bilinear => 'B',
        }
    }

    pub fn apply(self, img: &GrayImage) -> GrayImage {
        match self {
            Scaling::ZeroInsert => zero_insert(img),
            Scaling::Nearest => nearest_upsample(img),
            Scaling::Bilinear => bilinear_upsample(img),
        }
    }
}

/// One `X.Y.Z` experiment configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpsampleConfig {
    pub scaling: Scaling,
    pub n_blocks: usize,
    pub kernel_size: usize,
    pub kernel: KernelKind,
}

impl UpsampleConfig {
    pub fn new(scaling: Scaling, n_blocks: usize, kernel_size: usize) -> Result<Self> {
        let code = format!("{}.{n_blocks}.{kernel_size}", scaling.letter());
        if n_blocks == 0 {
            return Err(Error::Parse {
                code,
                field: "blocks",
                reason: "need at least one convolution block".into(),
            });
        }
        if kernel_size.is_multiple_of(2) {
            return Err(Error::Parse {
                code,
                field: "kernel size",
                reason: format!("{kernel_size} is even, kernel sizes must be odd"),
            });
        }
        Ok(Self {
            scaling,
            n_blocks,
            kernel_size,
            kernel: KernelKind::default(),
        })
    }

    pub fn with_kernel(mut self, kernel: KernelKind) -> Self {
        self.kernel = kernel;
        self
    }

    /// The `X.Y.Z` code, without kernel kind.
    pub fn code(&self) -> String {
        format!(
            "{}.{}.{}",
            self.scaling.letter(),
            self.n_blocks,
            self.kernel_size
        )
    }

    /// Gain applied right after scaling.
    ///
    /// Zero insertion keeps one sample in four, so its output is multiplied
    /// by 4 to keep the mean intensity of a stride-2 transposed convolution
    /// with unit-sum kernel. Interpolating scalers already preserve it.
    pub fn scaling_gain(&self) -> f64 {
        match self.scaling {
            Scaling::ZeroInsert => 4.0,
            Scaling::Nearest | Scaling::Bilinear => 1.0,
        }
    }
}

impl fmt::Display for UpsampleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for UpsampleConfig {
    type Err = Error;

    fn from_str(code: &str) -> Result<Self> {
        parse_config(code)
    }
}

/// Parses `[ZNB].<blocks>.<kernel size>`.
pub fn parse_config(code: &str) -> Result<UpsampleConfig> {
    let err = |field: &'static str, reason: String| Error::Parse {
        code: code.to_string(),
        field,
        reason,
    };
    let parts: Vec<&str> = code.split('.').collect();
    let [scaling, blocks, size] = parts.as_slice() else {
        return Err(err(
            "format",
            format!("expected X.Y.Z, found {} field(s)", parts.len()),
        ));
    };
    let scaling = match *scaling {
        "Z" => Scaling::ZeroInsert,
        "N" => Scaling::Nearest,
        "B" => Scaling::Bilinear,
        other => return Err(err("scaling", format!("{other:?} is not one of Z, N, B"))),
    };
    let parse_int = |field: &'static str, s: &str| -> Result<usize> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(field, format!("{s:?} is not a non-negative integer")));
        }
        s.parse()
            .map_err(|_| err(field, format!("{s:?} is out of range")))
    };
    let n_blocks = parse_int("blocks", blocks)?;
    let kernel_size = parse_int("kernel size", size)?;
    if n_blocks == 0 {
        return Err(err("blocks", "need at least one convolution block".into()));
    }
    if kernel_size.is_multiple_of(2) {
        return Err(err(
            "kernel size",
            format!("{kernel_size} is even, kernel sizes must be odd"),
        ));
    }
    Ok(UpsampleConfig {
        scaling,
        n_blocks,
        kernel_size,
        kernel: KernelKind::default(),
    })
}

/// Scaling followed by `n_blocks` convolutions, output is twice the size.
pub fn simulate_last_layer(img: &GrayImage, cfg: &UpsampleConfig) -> Result<GrayImage> {
    let kernel = Kernel::build(cfg.kernel, cfg.kernel_size)?;
    let mut out = cfg.scaling.apply(img);
    let gain = cfg.scaling_gain();
    if gain != 1.0 {
        out = GrayImage::from_parts(
            out.width(),
            out.height(),
            out.into_pixels().into_iter().map(|v| v * gain).collect(),
        );
    }
    for _ in 0..cfg.n_blocks {
        out = convolve2d(&out, &kernel);
    }
    Ok(out)
}

/// Surrogate of a generated image: 2x2 area downsampling, then the
/// simulated last layer. Output keeps the input's size.
pub fn make_surrogate(img: &GrayImage, cfg: &UpsampleConfig) -> Result<GrayImage> {
    simulate_last_layer(&downsample2(img)?, cfg)
}

/// [`make_surrogate`] over a batch, in input order.
pub fn make_surrogates(imgs: &[GrayImage], cfg: &UpsampleConfig) -> Result<Vec<GrayImage>> {
    imgs.par_iter()
        .map(|img| make_surrogate(img, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
    }

    #[test]
    fn zero_insert_examples() {
        let one = GrayImage::from_rows(&[&[1.0]]).unwrap();
        assert_eq!(zero_insert(&one).pixels(), &[1.0, 0.0, 0.0, 0.0]);

        let img = GrayImage::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let z = zero_insert(&img);
        assert_eq!(z.dims(), (4, 4));
        #[rustfmt::skip]
        let expected = [
            1.0, 0.0, 2.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
            3.0, 0.0, 4.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
        ];
        assert_eq!(z.pixels(), &expected);
    }

    #[test]
    fn nearest_examples() {
        let img = GrayImage::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        #[rustfmt::skip]
        let expected = [
            1.0, 1.0, 2.0, 2.0,
            1.0, 1.0, 2.0, 2.0,
            3.0, 3.0, 4.0, 4.0,
            3.0, 3.0, 4.0, 4.0,
        ];
        assert_eq!(nearest_upsample(&img).pixels(), &expected);
        let c = GrayImage::constant(3, 5, 0.4).unwrap();
        assert!(nearest_upsample(&c).pixels().iter().all(|&v| v == 0.4));
    }

    #[test]
    fn bilinear_ramp_and_constant() {
        let ramp = GrayImage::from_rows(&[&[0.0, 1.0], &[0.0, 1.0]]).unwrap();
        let up = bilinear_upsample(&ramp);
        for y in 0..4 {
            assert_eq!(up.row(y), &[0.0, 0.25, 0.75, 1.0]);
        }
        let c = GrayImage::constant(5, 3, 0.7).unwrap();
        assert!(bilinear_upsample(&c).pixels().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn bilinear_stays_within_input_range() {
        for seed in 0..10 {
            let img = random_image(7, 6, seed);
            let up = bilinear_upsample(&img);
            assert!(up.min() >= img.min() && up.max() <= img.max());
        }
    }

    #[test]
    fn convolution_identity_and_box() {
        let img = random_image(6, 5, 1);
        let id = Kernel::build(KernelKind::Identity, 5).unwrap();
        assert_eq!(convolve2d(&img, &id), img);

        let c = GrayImage::constant(6, 6, 2.0).unwrap();
        let boxed = convolve2d(&c, &Kernel::build(KernelKind::Box, 3).unwrap());
        for y in 1..5 {
            for x in 1..5 {
                assert!((boxed.get(x, y) - 2.0).abs() < 1e-12);
            }
        }
        assert!((boxed.get(0, 0) - 2.0 * 4.0 / 9.0).abs() < 1e-12);
        assert!((boxed.get(3, 0) - 2.0 * 6.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn convolution_matches_quadruple_loop() {
        let img = random_image(8, 8, 2);
        let k = Kernel::build(KernelKind::Gaussian { sigma: 1.0 }, 5).unwrap();
        let out = convolve2d(&img, &k);
        for y in 0..8i64 {
            for x in 0..8i64 {
                let mut acc = 0.0;
                for v in 0..8i64 {
                    for u in 0..8i64 {
                        let (ky, kx) = (y - v + 2, x - u + 2);
                        if (0..5).contains(&ky) && (0..5).contains(&kx) {
                            acc +=
                                img.get(u as usize, v as usize) * k.get(kx as usize, ky as usize);
                        }
                    }
                }
                assert!((out.get(x as usize, y as usize) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn convolution_is_flipped_not_correlated() {
        let img =
            GrayImage::from_fn(5, 5, |x, y| if x == 2 && y == 2 { 1.0 } else { 0.0 }).unwrap();
        let mut w = vec![0.0; 9];
        w[0] = 1.0;
        // An impulse reproduces the kernel around itself.
        let out = convolve2d(&img, &Kernel::new(3, w).unwrap());
        assert_eq!(out.get(1, 1), 1.0);
        assert_eq!(out.pixels().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn kernels_sum_to_one_and_reject_even_sizes() {
        for kind in [
            KernelKind::Box,
            KernelKind::Gaussian { sigma: 0.7 },
            KernelKind::Identity,
        ] {
            for size in [1, 3, 5, 7, 9] {
                let k = Kernel::build(kind, size).unwrap();
                assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert!(Kernel::build(KernelKind::Box, 4).is_err());
        assert!(Kernel::new(2, vec![1.0; 4]).is_err());
    }

    #[test]
    fn parses_table_codes() {
        let n = parse_config("N.1.5").unwrap();
        assert_eq!(
            (n.scaling, n.n_blocks, n.kernel_size),
            (Scaling::Nearest, 1, 5)
        );
        assert_eq!(n.kernel, KernelKind::Gaussian { sigma: 1.0 });
        let z: UpsampleConfig = "Z.3.5".parse().unwrap();
        assert_eq!(
            (z.scaling, z.n_blocks, z.kernel_size),
            (Scaling::ZeroInsert, 3, 5)
        );
        assert_eq!(z.code(), "Z.3.5");
        for (code, field) in [
            ("B.1.4", "kernel size"),
            ("Q.1.5", "scaling"),
            ("N.0.5", "blocks"),
            ("N.1", "format"),
            ("N.x.5", "blocks"),
            ("Baseline", "format"),
            ("N.1.-5", "kernel size"),
        ] {
            match parse_config(code) {
                Err(Error::Parse { field: f, .. }) => assert_eq!(f, field, "{code}"),
                other => panic!("{code}: {other:?}"),
            }
        }
    }

    #[test]
    fn kernel_kind_parsing() {
        assert_eq!("box".parse::<KernelKind>().unwrap(), KernelKind::Box);
        assert_eq!(
            "gaussian:0.5".parse::<KernelKind>().unwrap(),
            KernelKind::Gaussian { sigma: 0.5 }
        );
        assert!("gaussian:-1".parse::<KernelKind>().is_err());
        assert!("sobel".parse::<KernelKind>().is_err());
    }

    #[test]
    fn identity_block_reduces_to_plain_scaling() {
        let img = random_image(5, 4, 3);
        let cfg = parse_config("N.1.5")
            .unwrap()
            .with_kernel(KernelKind::Identity);
        assert_eq!(
            simulate_last_layer(&img, &cfg).unwrap(),
            nearest_upsample(&img)
        );
        let cfg = parse_config("Z.2.3")
            .unwrap()
            .with_kernel(KernelKind::Identity);
        let z = simulate_last_layer(&img, &cfg).unwrap();
        for (a, b) in z.pixels().iter().zip(zero_insert(&img).pixels()) {
            assert_eq!(*a, 4.0 * b);
        }
    }

    // Pixels whose kernel support (all blocks) stays inside the image.
    fn interior(img: &GrayImage, margin: usize) -> Vec<f64> {
        let (w, h) = img.dims();
        (margin..h - margin)
            .flat_map(|y| img.row(y)[margin..w - margin].to_vec())
            .collect()
    }

    #[test]
    fn constant_image_stays_constant_in_interior() {
        let c = GrayImage::constant(16, 16, 0.6).unwrap();
        for code in ["B.1.3", "B.3.5", "N.1.5", "N.1.7"] {
            let cfg = parse_config(code).unwrap();
            let out = simulate_last_layer(&c, &cfg).unwrap();
            let margin = cfg.n_blocks * (cfg.kernel_size / 2);
            for v in interior(&out, margin) {
                assert!((v - 0.6).abs() < 1e-12, "{code}: {v}");
            }
            let s = make_surrogate(&c, &cfg).unwrap();
            assert_eq!(s.dims(), (16, 16));
            for v in interior(&s, margin) {
                assert!((v - 0.6).abs() < 1e-12, "{code}: {v}");
            }
        }
    }

    #[test]
    fn zero_insert_keeps_mean_intensity() {
        let c = GrayImage::constant(16, 16, 0.6).unwrap();
        let out = simulate_last_layer(&c, &parse_config("Z.1.5").unwrap()).unwrap();
        // A 2x2 window always covers exactly one source sample.
        let inner = out.crop(4, 4, 24, 24).unwrap();
        assert!((inner.mean() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn surrogates_require_even_dims() {
        let img = random_image(5, 4, 0);
        assert!(make_surrogate(&img, &parse_config("B.1.5").unwrap()).is_err());
        let batch = [random_image(8, 8, 1), random_image(8, 8, 2)];
        let out = make_surrogates(&batch, &parse_config("B.1.5").unwrap()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(
            out[1],
            make_surrogate(&batch[1], &parse_config("B.1.5").unwrap()).unwrap()
        );
    }
}
