//! 2D DFT, magnitude maps and azimuthal reduction to a 1D spectrum.
//!
//! The forward transform keeps the explicit `1/(MN)` factor:
//!
//! ```text
//! F(kx, ky) = 1/(MN) * sum_x sum_y f(x, y) * exp(-i 2pi (kx x / M + ky y / N))
//! ```
//!
//! where `M` is the image width and `N` its height. After [`center_shift`]
//! the DC term sits at `(floor(M/2), floor(N/2))` and every cell is assigned
//! to the radial bin `round(hypot(dx, dy))`. Bins run from `0` to
//! `R = floor(hypot(floor(M/2), floor(N/2)))`; cells rounding past `R` (the
//! extreme corners) are dropped.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, GrayImage, Result};

/// Complex DFT coefficients, row-major with `kx` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMap {
    width: usize,
    height: usize,
    coeffs: Vec<Complex64>,
}

impl SpectrumMap {
    pub fn from_coeffs(width: usize, height: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 || coeffs.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} spectrum needs {} coefficients, got {}",
                width * height,
                coeffs.len()
            )));
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Validation("non-finite spectrum coefficient".into()));
        }
        Ok(Self {
            width,
            height,
            coeffs,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Every coefficient carries the `1/(MN)` factor; there is no
    /// unnormalized variant.
    pub fn is_normalized(&self) -> bool {
        true
    }

    #[inline]
    pub fn get(&self, kx: usize, ky: usize) -> Complex64 {
        self.coeffs[ky * self.width + kx]
    }
}

/// Forward 2D DFT with the `1/(MN)` normalization.
pub fn dft2(img: &GrayImage) -> SpectrumMap {
    let (w, h) = img.dims();
    let mut planner = FftPlanner::<f64>::new();
    let mut data: Vec<Complex64> = img
        .pixels()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();

    let row_fft = planner.plan_fft_forward(w);
    row_fft.process(&mut data);

    let col_fft = planner.plan_fft_forward(h);
    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for (y, c) in column.iter_mut().enumerate() {
            *c = data[y * w + x];
        }
        col_fft.process(&mut column);
        for (y, c) in column.iter().enumerate() {
            data[y * w + x] = *c;
        }
    }

    let scale = 1.0 / (w * h) as f64;
    for c in &mut data {
        *c *= scale;
    }
    SpectrumMap {
        width: w,
        height: h,
        coeffs: data,
    }
}

/// Elementwise `|F|`.
pub fn magnitude_map(spec: &SpectrumMap) -> GrayImage {
    GrayImage::from_parts(
        spec.width,
        spec.height,
        spec.coeffs.iter().map(|c| c.norm()).collect(),
    )
}

/// Moves entry `(0, 0)` to `(floor(w/2), floor(h/2))` by a cyclic shift.
pub fn center_shift_grid<T: Copy>(width: usize, height: usize, data: &[T]) -> Vec<T> {
    assert_eq!(data.len(), width * height, "grid size mismatch");
    let (sx, sy) = (width / 2, height / 2);
    let mut out = data.to_vec();
    for y in 0..height {
        let ty = (y + sy) % height;
        for x in 0..width {
            out[ty * width + (x + sx) % width] = data[y * width + x];
        }
    }
    out
}

pub fn center_shift(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    GrayImage::from_parts(w, h, center_shift_grid(w, h, img.pixels()))
}

/// A magnitude grid whose DC term sits at `(floor(w/2), floor(h/2))`.
///
/// Only [`CenteredMagnitude::from_spectrum`] and
/// [`CenteredMagnitude::assume_centered`] construct it, so
/// [`reduce_azimuthal`] never sees an uncentered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMagnitude(GrayImage);

impl CenteredMagnitude {
    pub fn from_spectrum(spec: &SpectrumMap) -> Self {
        Self(center_shift(&magnitude_map(spec)))
    }

    /// Wraps a grid the caller already centered. Values must be non-negative.
    pub fn assume_centered(grid: GrayImage) -> Result<Self> {
        if grid.pixels().iter().any(|&v| v < 0.0) {
            return Err(Error::Validation(
                "magnitude grid has negative entries".into(),
            ));
        }
        Ok(Self(grid))
    }

    pub fn grid(&self) -> &GrayImage {
        &self.0
    }
}

/// Largest radial bin for a `width`x`height` grid.
pub fn max_radial_bin(width: usize, height: usize) -> usize {
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    cx.hypot(cy).floor() as usize
}

/// Azimuthally averaged magnitude, indexed by integer radial bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSpectrum {
    values: Vec<f64>,
    normalized: bool,
    /// Bins that received no cells; their value is 0.
    empty_bins: Vec<usize>,
}

impl ReducedSpectrum {
    pub fn new(values: Vec<f64>, normalized: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension(
                "reduced spectrum needs at least one bin".into(),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(format!(
                "bin {i} is negative or non-finite: {}",
                values[i]
            )));
        }
        Ok(Self {
            values,
            normalized,
            empty_bins: Vec::new(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn empty_bins(&self) -> &[usize] {
        &self.empty_bins
    }

    /// `R`, the index of the last bin.
    pub fn max_bin(&self) -> usize {
        self.values.len() - 1
    }

    /// Normalized spatial frequency `r / R`.
    pub fn freq(&self, r: usize) -> f64 {
        match self.max_bin() {
            0 => 0.0,
            max => r as f64 / max as f64,
        }
    }

    /// Divides every bin by the DC bin.
    pub fn normalize(&self) -> Result<Self> {
        let dc = self.values[0];
        if dc <= 0.0 {
            return Err(Error::DegenerateSpectrum(
                "DC bin is zero, cannot normalize".into(),
            ));
        }
        let mut values: Vec<f64> = self.values.iter().map(|v| v / dc).collect();
        values[0] = 1.0;
        Ok(Self {
            values,
            normalized: true,
            empty_bins: self.empty_bins.clone(),
        })
    }

    /// Bins with `r / R >= 1 - fraction`.
    pub fn high_band(&self, fraction: f64) -> Result<HighBand> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Validation(format!(
                "band fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let max = self.max_bin();
        if max < 4 {
            return Err(Error::BandTooSmall { bins: 0, needed: 2 });
        }
        // Exact threshold r >= ceil((1 - fraction) R), tolerant of the
        // rounding in (1 - fraction) itself.
        let threshold = (1.0 - fraction) * max as f64;
        let start = (threshold - 1e-9).ceil().max(0.0) as usize;
        let bins: Vec<usize> = (start..=max).collect();
        if bins.len() < 2 {
            return Err(Error::BandTooSmall {
                bins: bins.len(),
                needed: 2,
            });
        }
        Ok(HighBand {
            freqs: bins.iter().map(|&r| self.freq(r)).collect(),
            values: bins.iter().map(|&r| self.values[r]).collect(),
            bins,
        })
    }

    /// Mean of the high-band values.
    pub fn high_band_mean(&self, fraction: f64) -> Result<f64> {
        let band = self.high_band(fraction)?;
        Ok(band.values.iter().sum::<f64>() / band.values.len() as f64)
    }
}

/// The high-frequency tail of a reduced spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct HighBand {
    pub bins: Vec<usize>,
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
}

/// Averages the centered magnitude over rings of equal rounded radius.
pub fn reduce_azimuthal(mag: &CenteredMagnitude) -> ReducedSpectrum {
    let grid = mag.grid();
    let (w, h) = grid.dims();
    let (cx, cy) = ((w / 2) as f64, (h / 2) as f64);
    let max = max_radial_bin(w, h);

    let mut sums = vec![0.0; max + 1];
    let mut counts = vec![0usize; max + 1];
    for y in 0..h {
        let dy = y as f64 - cy;
        for x in 0..w {
            let r = (x as f64 - cx).hypot(dy).round() as usize;
            if r <= max {
                sums[r] += grid.get(x, y);
                counts[r] += 1;
            }
        }
    }

    let mut empty_bins = Vec::new();
    let values = sums
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(r, (&s, &n))| {
            if n == 0 {
                empty_bins.push(r);
                0.0
            } else {
                s / n as f64
            }
        })
        .collect();
    ReducedSpectrum {
        values,
        normalized: false,
        empty_bins,
    }
}

/// `dft2 -> magnitude -> center -> reduce` for one image (un-normalized).
pub fn reduced_spectrum(img: &GrayImage) -> ReducedSpectrum {
    reduce_azimuthal(&CenteredMagnitude::from_spectrum(&dft2(img)))
}

/// Reduced spectra for a batch, in input order.
pub fn reduced_spectra(imgs: &[GrayImage]) -> Vec<ReducedSpectrum> {
    imgs.par_iter().map(reduced_spectrum).collect()
}

/// Per-bin mean and population standard deviation over a set of spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub count: usize,
    pub normalized: bool,
}

impl SpectrumStats {
    pub fn max_bin(&self) -> usize {
        self.mean.len() - 1
    }
}

pub fn aggregate(specs: &[ReducedSpectrum]) -> Result<SpectrumStats> {
    let first = specs
        .first()
        .ok_or_else(|| Error::Validation("cannot aggregate an empty list of spectra".into()))?;
    let bins = first.values.len();
    for (i, s) in specs.iter().enumerate() {
        if s.values.len() != bins {
            return Err(Error::Validation(format!(
                "spectrum {i} has R = {} but spectrum 0 has R = {}",
                s.max_bin(),
                first.max_bin()
            )));
        }
        if s.normalized != first.normalized {
            return Err(Error::Validation(format!(
                "spectrum {i} differs in normalization from spectrum 0"
            )));
        }
    }

    // Welford, fixed input order.
    let mut mean = vec![0.0; bins];
    let mut m2 = vec![0.0; bins];
    for (n, s) in specs.iter().enumerate() {
        let n = (n + 1) as f64;
        for ((m, q), &v) in mean.iter_mut().zip(m2.iter_mut()).zip(&s.values) {
            let delta = v - *m;
            *m += delta / n;
            *q += delta * (v - *m);
        }
    }
    let count = specs.len();
    let std = m2
        .iter()
        .map(|q| (q / count as f64).max(0.0).sqrt())
        .collect();
    Ok(SpectrumStats {
        mean,
        std,
        count,
        normalized: first.normalized,
    })
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

    // Direct double sum, written independently of the FFT path.
    fn naive_dft(img: &GrayImage) -> Vec<Complex64> {
        let (m, n) = img.dims();
        let mut out = Vec::with_capacity(m * n);
        for ky in 0..n {
            for kx in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for v in 0..n {
                    for u in 0..m {
                        let phase = -2.0
                            * std::f64::consts::PI
                            * (kx as f64 * u as f64 / m as f64 + ky as f64 * v as f64 / n as f64);
                        acc += img.get(u, v) * Complex64::from_polar(1.0, phase);
                    }
                }
                out.push(acc / (m * n) as f64);
            }
        }
        out
    }

    #[test]
    fn constant_image_is_dc_only() {
        let c = 0.37;
        let spec = dft2(&GrayImage::constant(4, 4, c).unwrap());
        assert!((spec.get(0, 0) - Complex64::new(c, 0.0)).norm() < 1e-12);
        for (i, z) in spec.coeffs().iter().enumerate().skip(1) {
            assert!(z.norm() < 1e-12, "coeff {i} = {z}");
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let img =
            GrayImage::from_fn(4, 4, |x, y| if x == 0 && y == 0 { 1.0 } else { 0.0 }).unwrap();
        for z in dft2(&img).coeffs() {
            assert!((z - Complex64::new(1.0 / 16.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn matches_direct_summation_8x8() {
        let img = random_image(8, 8, 11);
        let fast = dft2(&img);
        for (a, b) in fast.coeffs().iter().zip(naive_dft(&img)) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn matches_direct_summation_non_square() {
        let img = random_image(6, 5, 3);
        let fast = dft2(&img);
        for (a, b) in fast.coeffs().iter().zip(naive_dft(&img)) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn magnitude_examples() {
        let zeros = SpectrumMap::from_coeffs(2, 2, vec![Complex64::new(0.0, 0.0); 4]).unwrap();
        assert!(magnitude_map(&zeros).pixels().iter().all(|&v| v == 0.0));

        let mut coeffs = vec![Complex64::new(0.0, 0.0); 4];
        coeffs[3] = Complex64::new(3.0, 4.0);
        let mag = magnitude_map(&SpectrumMap::from_coeffs(2, 2, coeffs).unwrap());
        assert_eq!(mag.get(1, 1), 5.0);

        let spec = dft2(&random_image(8, 8, 5));
        let mag = magnitude_map(&spec);
        for (m, c) in mag.pixels().iter().zip(spec.coeffs()) {
            assert!((m - (c.re * c.re + c.im * c.im).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn center_shift_marker_and_involution() {
        let img =
            GrayImage::from_fn(4, 4, |x, y| if x == 0 && y == 0 { 1.0 } else { 0.0 }).unwrap();
        let c = center_shift(&img);
        assert_eq!(c.get(2, 2), 1.0);
        assert_eq!(c.pixels().iter().sum::<f64>(), 1.0);

        let g = random_image(6, 4, 9);
        assert_eq!(center_shift(&center_shift(&g)), g);
    }

    #[test]
    fn center_shift_matches_modular_index_oracle() {
        let g = random_image(6, 4, 21);
        let c = center_shift(&g);
        for y in 0..4 {
            for x in 0..6 {
                assert_eq!(c.get((x + 3) % 6, (y + 2) % 4), g.get(x, y));
            }
        }
    }

    #[test]
    fn reduce_dc_only_and_all_ones() {
        let dc = GrayImage::from_fn(9, 9, |x, y| if x == 4 && y == 4 { 2.5 } else { 0.0 }).unwrap();
        let rs = reduce_azimuthal(&CenteredMagnitude::assume_centered(dc).unwrap());
        assert_eq!(rs.values()[0], 2.5);
        assert!(rs.values()[1..].iter().all(|&v| v == 0.0));

        let ones = GrayImage::constant(128, 128, 1.0).unwrap();
        let rs = reduce_azimuthal(&CenteredMagnitude::assume_centered(ones).unwrap());
        assert_eq!(rs.max_bin(), 90);
        assert!(rs.values().iter().all(|&v| v == 1.0));
        assert!(rs.empty_bins().is_empty());
    }

    #[test]
    fn reduce_matches_bucketing_oracle() {
        let g = random_image(16, 16, 4);
        let rs = reduce_azimuthal(&CenteredMagnitude::assume_centered(g.clone()).unwrap());
        let max = (8f64 * 8.0 + 8.0 * 8.0).sqrt().floor() as usize;
        assert_eq!(rs.max_bin(), max);
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); max + 1];
        for y in 0..16i64 {
            for x in 0..16i64 {
                let d2 = ((x - 8) * (x - 8) + (y - 8) * (y - 8)) as f64;
                let r = d2.sqrt().round() as usize;
                if r <= max {
                    buckets[r].push(g.get(x as usize, y as usize));
                }
            }
        }
        for (r, b) in buckets.iter().enumerate() {
            let mean = b.iter().sum::<f64>() / b.len() as f64;
            assert!((rs.values()[r] - mean).abs() < 1e-12, "bin {r}");
        }
    }

    #[test]
    fn normalize_examples() {
        let rs = ReducedSpectrum::new(vec![4.0, 2.0, 1.0], false).unwrap();
        let n = rs.normalize().unwrap();
        assert_eq!(n.values(), &[1.0, 0.5, 0.25]);
        assert!(n.is_normalized());
        assert_eq!(n.normalize().unwrap(), n);

        let zero = ReducedSpectrum::new(vec![0.0, 1.0], false).unwrap();
        assert!(matches!(
            zero.normalize(),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn normalize_preserves_ratios() {
        let rs = reduced_spectrum(&random_image(12, 12, 8));
        let n = rs.normalize().unwrap();
        assert_eq!(n.values()[0], 1.0);
        for (a, b) in rs.values().iter().zip(n.values()) {
            assert!((a / rs.values()[0] - b).abs() < 1e-12);
        }
    }

    #[test]
    fn high_band_bins() {
        let rs = |max: usize| ReducedSpectrum::new(vec![1.0; max + 1], false).unwrap();
        let band = rs(88).high_band(0.25).unwrap();
        assert_eq!(band.bins, (66..=88).collect::<Vec<_>>());
        assert_eq!(band.bins.len(), 23);
        assert_eq!(band.freqs[0], 0.75);

        assert_eq!(rs(4).high_band(0.25).unwrap().bins, vec![3, 4]);
        assert_eq!(
            rs(10).high_band(0.5).unwrap().bins,
            (5..=10).collect::<Vec<_>>()
        );

        assert!(matches!(
            rs(3).high_band(0.25),
            Err(Error::BandTooSmall { .. })
        ));
        assert!(matches!(rs(10).high_band(0.0), Err(Error::Validation(_))));
        assert!(matches!(rs(10).high_band(1.0), Err(Error::Validation(_))));
    }

    #[test]
    fn aggregate_examples() {
        let a = ReducedSpectrum::new(vec![0.0, 2.0], false).unwrap();
        let b = ReducedSpectrum::new(vec![2.0, 0.0], false).unwrap();

        let one = aggregate(std::slice::from_ref(&a)).unwrap();
        assert_eq!(one.mean, a.values());
        assert_eq!(one.std, vec![0.0, 0.0]);

        let two = aggregate(&[a.clone(), b]).unwrap();
        assert_eq!(two.mean, vec![1.0, 1.0]);
        assert_eq!(two.std, vec![1.0, 1.0]);
        assert_eq!(two.count, 2);

        let longer = ReducedSpectrum::new(vec![1.0, 1.0, 1.0], false).unwrap();
        assert!(aggregate(&[a.clone(), longer]).is_err());
        let normed = ReducedSpectrum::new(vec![1.0, 2.0], true).unwrap();
        assert!(aggregate(&[a, normed]).is_err());
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn aggregate_matches_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let specs: Vec<ReducedSpectrum> = (0..100)
            .map(|_| {
                ReducedSpectrum::new((0..20).map(|_| rng.random::<f64>() * 5.0).collect(), false)
                    .unwrap()
            })
            .collect();
        let stats = aggregate(&specs).unwrap();
        for r in 0..20 {
            let mean = specs.iter().map(|s| s.values()[r]).sum::<f64>() / 100.0;
            let var = specs
                .iter()
                .map(|s| (s.values()[r] - mean).powi(2))
                .sum::<f64>()
                / 100.0;
            assert!((stats.mean[r] - mean).abs() < 1e-12);
            assert!((stats.std[r] - var.sqrt()).abs() < 1e-12);
        }
    }
}
