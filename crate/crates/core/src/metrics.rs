//! Image quality metrics: PSNR, SSIM and mean absolute error with an
//! optional border crop.

use std::fmt;

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;

/// Border fraction cropped before evaluation by default.
pub const DEFAULT_CROP: f64 = 0.05;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Pixel rectangle `(x0, y0, width, height)` that survives cropping
/// `floor(fraction · dim)` pixels from each side.
pub fn crop_extent(width: usize, height: usize, fraction: f64) -> Result<(usize, usize, usize, usize)> {
    if !(0.0..=0.49).contains(&fraction) {
        return Err(Error::invalid("crop fraction", format!("{fraction} not in [0, 0.49]")));
    }
    let cut = |dim: usize| (fraction * dim as f64 + 1e-9).floor() as usize;
    let (cx, cy) = (cut(width), cut(height));
    if 2 * cx >= width || 2 * cy >= height {
        return Err(Error::invalid(
            "crop fraction",
            format!("{fraction} leaves nothing of a {width}x{height} image"),
        ));
    }
    Ok((cx, cy, width - 2 * cx, height - 2 * cy))
}

/// Removes `floor(fraction · dim)` pixels from every side.
pub fn crop_border(image: &ImageBuffer, fraction: f64) -> Result<ImageBuffer> {
    let (x0, y0, w, h) = crop_extent(image.width(), image.height(), fraction)?;
    let c = image.channels();
    let mut data = Vec::with_capacity(w * h * c);
    for y in y0..y0 + h {
        let start = (y * image.width() + x0) * c;
        data.extend_from_slice(&image.data()[start..start + w * c]);
    }
    ImageBuffer::new(w, h, c, data)
}

/// Same crop applied to a per-pixel mask of a `width × height` raster.
pub fn crop_mask(mask: &[bool], width: usize, height: usize, fraction: f64) -> Result<Vec<bool>> {
    if mask.len() != width * height {
        return Err(Error::Shape(format!("mask has {} entries for {width}x{height}", mask.len())));
    }
    let (x0, y0, w, h) = crop_extent(width, height, fraction)?;
    Ok((y0..y0 + h)
        .flat_map(|y| mask[y * width + x0..y * width + x0 + w].iter().copied())
        .collect())
}

fn check_pair(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )))
    }
}

/// Mean squared error over all samples.
pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_pair(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(1 / MSE)`, capped at [`PSNR_CAP`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP)
    }
}

pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

/// PSNR restricted to pixels where `mask` is set.
pub fn psnr_masked(a: &ImageBuffer, b: &ImageBuffer, mask: &[bool]) -> Result<f64> {
    check_pair(a, b)?;
    if mask.len() != a.width() * a.height() {
        return Err(Error::Shape(format!(
            "mask has {} entries for {}x{}",
            mask.len(),
            a.width(),
            a.height()
        )));
    }
    let c = a.channels();
    let (mut sum, mut count) = (0.0f64, 0usize);
    for (p, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        for k in 0..c {
            let d = a.data()[p * c + k] as f64 - b.data()[p * c + k] as f64;
            sum += d * d;
        }
        count += c;
    }
    if count == 0 {
        return Err(Error::invalid("metric mask", "selects no pixels"));
    }
    Ok(psnr_from_mse(sum / count as f64))
}

/// Mean absolute error over all samples.
pub fn l1(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_pair(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .sum();
    Ok(sum / a.data().len() as f64)
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - mid;
        *v = (-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable valid-window filtering of a `w × h` plane.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM with an 11×11 Gaussian window (σ = 1.5), `K1 = 0.01`,
/// `K2 = 0.03`, dynamic range 1, over valid windows, averaged over channels.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_pair(a, b)?;
    let (w, h, c) = (a.width(), a.height(), a.channels());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::invalid(
            "ssim input",
            format!("{w}x{h} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"),
        ));
    }
    let k = gaussian_kernel();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for ch in 0..c {
        let x: Vec<f64> = (0..w * h).map(|p| a.data()[p * c + ch] as f64).collect();
        let y: Vec<f64> = (0..w * h).map(|p| b.data()[p * c + ch] as f64).collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u * v).collect();
        let mx = filter_valid(&x, w, h, &k);
        let my = filter_valid(&y, w, h, &k);
        let sxx = filter_valid(&xx, w, h, &k);
        let syy = filter_valid(&yy, w, h, &k);
        let sxy = filter_valid(&xy, w, h, &k);
        let mut sum = 0.0;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            sum += ((2.0 * ux * uy + c1) * (2.0 * cov + c2))
                / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += sum / mx.len() as f64;
    }
    Ok(total / c as f64)
}

/// Scores of one prediction against its ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    pub l1: f64,
    pub crop_fraction: f64,
}

impl MetricReport {
    /// Crops both images by `crop` and scores them.
    pub fn evaluate(pred: &ImageBuffer, gt: &ImageBuffer, crop: f64) -> Result<Self> {
        check_pair(pred, gt)?;
        let a = crop_border(pred, crop)?;
        let b = crop_border(gt, crop)?;
        Ok(MetricReport {
            psnr: psnr(&a, &b)?,
            ssim: ssim(&a, &b)?,
            l1: l1(&a, &b)?,
            crop_fraction: crop,
        })
    }

    /// Field-wise mean; `None` for an empty slice.
    pub fn mean(reports: &[MetricReport]) -> Option<MetricReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        Some(MetricReport {
            psnr: reports.iter().map(|r| r.psnr).sum::<f64>() / n,
            ssim: reports.iter().map(|r| r.ssim).sum::<f64>() / n,
            l1: reports.iter().map(|r| r.l1).sum::<f64>() / n,
            crop_fraction: reports[0].crop_fraction,
        })
    }
}

impl fmt::Display for MetricReport {
    /// `key: value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "psnr: {:.6}", self.psnr)?;
        writeln!(f, "ssim: {:.6}", self.ssim)?;
        writeln!(f, "l1: {:.6}", self.l1)?;
        writeln!(f, "crop_fraction: {}", self.crop_fraction)?;
        write!(f, "lpips: unavailable (needs a pretrained network)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noise(w: usize, h: usize, c: usize, seed: u64) -> ImageBuffer {
        let mut s = seed | 1;
        ImageBuffer::from_fn(w, h, c, |_, _, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 40) as f32 / (1u64 << 24) as f32
        })
    }

    #[test]
    fn crop_sizes() {
        let img = ImageBuffer::zeros(100, 100, 3);
        let c = crop_border(&img, 0.05).unwrap();
        assert_eq!((c.width(), c.height()), (90, 90));
        let img = ImageBuffer::zeros(101, 37, 1);
        let c = crop_border(&img, 0.05).unwrap();
        // floor(5.05) = 5 and floor(1.85) = 1 per side
        assert_eq!((c.width(), c.height()), (91, 35));
        assert_eq!(crop_border(&img, 0.0).unwrap(), img);
        assert!(crop_border(&img, 0.5).is_err());
        assert!(crop_border(&ImageBuffer::zeros(2, 2, 1), 0.49).is_ok());
    }

    #[test]
    fn crop_keeps_the_centre() {
        let img = ImageBuffer::from_fn(10, 10, 1, |x, y, _| (y * 10 + x) as f32 / 100.0);
        let c = crop_border(&img, 0.1).unwrap();
        assert_eq!(c.get(0, 0, 0), img.get(1, 1, 0));
        assert_eq!(c.get(7, 7, 0), img.get(8, 8, 0));
        let m: Vec<bool> = (0..100).map(|p| p == 11).collect();
        let cm = crop_mask(&m, 10, 10, 0.1).unwrap();
        assert!(cm[0] && cm.iter().filter(|&&b| b).count() == 1);
    }

    #[test]
    fn psnr_closed_forms() {
        let a = ImageBuffer::filled(16, 16, 3, 0.5);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        let z = ImageBuffer::zeros(16, 16, 3);
        let b = ImageBuffer::filled(16, 16, 3, 0.1);
        let v = psnr(&z, &b).unwrap();
        // 0.1 is not representable in f32, hence the tolerance
        assert!((v - 20.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn psnr_matches_scalar_loop() {
        let a = noise(13, 9, 3, 1);
        let b = noise(13, 9, 3, 2);
        let mut sum = 0.0f64;
        for i in 0..a.data().len() {
            let d = a.data()[i] as f64 - b.data()[i] as f64;
            sum += d * d;
        }
        let oracle = 10.0 * (1.0 / (sum / a.data().len() as f64)).log10();
        assert!((psnr(&a, &b).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn masked_psnr_ignores_unmasked() {
        let a = ImageBuffer::filled(4, 4, 1, 0.5);
        let mut b = a.clone();
        b.set(0, 0, 0, 1.0);
        let mask: Vec<bool> = (0..16).map(|p| p != 0).collect();
        assert_eq!(psnr_masked(&a, &b, &mask).unwrap(), PSNR_CAP);
        assert!(psnr_masked(&a, &b, &[false; 16]).is_err());
    }

    #[test]
    fn ssim_constants() {
        let a = ImageBuffer::filled(16, 16, 1, 0.5);
        let b = ImageBuffer::filled(16, 16, 1, 0.6);
        let c1 = 1e-4;
        let (m1, m2) = (0.5f32 as f64, 0.6f32 as f64);
        let oracle = (2.0 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1);
        assert!((ssim(&a, &b).unwrap() - oracle).abs() < 1e-9);
        assert!(ssim(&ImageBuffer::zeros(10, 20, 1), &ImageBuffer::zeros(10, 20, 1)).is_err());
    }

    #[test]
    fn ssim_anticorrelated_is_negative() {
        let a = ImageBuffer::from_fn(20, 20, 1, |x, y, _| if (x + y) % 2 == 0 { 0.0 } else { 1.0 });
        let b = ImageBuffer::from_fn(20, 20, 1, |x, y, _| if (x + y) % 2 == 0 { 1.0 } else { 0.0 });
        let v = ssim(&a, &b).unwrap();
        assert!((-1.0..0.0).contains(&v), "{v}");
    }

    #[test]
    fn report_text() {
        let a = ImageBuffer::filled(20, 20, 3, 0.5);
        let r = MetricReport::evaluate(&a, &a, 0.05).unwrap();
        let s = r.to_string();
        assert!(s.contains("psnr: 99.000000"));
        assert!(s.contains("ssim: 1.000000"));
        assert!(s.contains("lpips: unavailable"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn symmetric_and_bounded(s1 in any::<u64>(), s2 in any::<u64>()) {
            let a = noise(14, 12, 3, s1);
            let b = noise(14, 12, 3, s2);
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
            let (x, y) = (ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&x));
            prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn crop_then_zero_crop(w in 3usize..60, h in 3usize..60, f in 0.0f64..0.3) {
            let a = noise(w, h, 2, (w * h) as u64);
            let c = crop_border(&a, f).unwrap();
            prop_assert_eq!(crop_border(&c, 0.0).unwrap(), c);
        }

        #[test]
        fn psnr_monotone(m1 in 1e-8f64..1.0, m2 in 1e-8f64..1.0) {
            let (lo, hi) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
            prop_assert!(psnr_from_mse(lo) >= psnr_from_mse(hi));
        }
    }
}
