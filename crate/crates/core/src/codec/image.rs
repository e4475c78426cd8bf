//! Global 2-D DCT image codec for 8-bit gray-scale images.

use serde::{Deserialize, Serialize};

use super::dct::{dct2_forward, dct2_inverse};
use super::packet::{CoefficientPacket, PayloadKind};
use super::transform::{decode_frame, encode_frame, CodecOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        let img = Self {
            width,
            height,
            pixels,
        };
        img.validate()?;
        Ok(img)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("width", self.width as f64, "image must be non-empty"));
        }
        if self.width * self.height != self.pixels.len() {
            return Err(Error::LengthMismatch {
                left: self.width * self.height,
                right: self.pixels.len(),
            });
        }
        Ok(())
    }
}

/// AC positions ordered by anti-diagonal `u + v`, then by row `v`.
pub fn low_frequency_scan(width: usize, height: usize) -> Vec<usize> {
    let mut pos: Vec<(usize, usize)> = (0..height)
        .flat_map(|v| (0..width).map(move |u| (u, v)))
        .skip(1)
        .collect();
    pos.sort_by_key(|&(u, v)| (u + v, v));
    pos.into_iter().map(|(u, v)| v * width + u).collect()
}

pub fn compress_image(img: &GrayImage, opts: &CodecOptions) -> Result<CoefficientPacket> {
    img.validate()?;
    opts.validate()?;
    let (w, h) = (img.width, img.height);
    let data: Vec<f64> = img.pixels.iter().map(|&p| p as f64).collect();
    let coeffs = dct2_forward(&data, w, h);
    let scan = low_frequency_scan(w, h);
    let frame = encode_frame(&coeffs, opts.kept_ac(w * h), opts.selection, &scan, opts.value_bits);
    Ok(CoefficientPacket {
        kind: PayloadKind::Image,
        selection: opts.selection,
        value_bits: opts.value_bits,
        width: w as u32,
        height: h as u32,
        sample_rate: 0,
        frame_len: (w * h) as u32,
        keep_fraction: opts.keep_fraction as f32,
        frames: vec![frame],
    })
}

pub fn decompress_image(p: &CoefficientPacket) -> Result<GrayImage> {
    if p.kind != PayloadKind::Image {
        return Err(Error::param("kind", 0.0, "packet does not hold an image"));
    }
    let (w, h) = (p.width as usize, p.height as usize);
    let [frame] = p.frames.as_slice() else {
        return Err(Error::param("frames", p.frames.len() as f64, "image packets hold one frame"));
    };
    let scan = low_frequency_scan(w, h);
    let coeffs = decode_frame(frame, w * h, p.selection, &scan, p.value_bits)?;
    let pixels = dct2_inverse(&coeffs, w, h)
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(w, h, pixels)
}

/// Peak signal-to-noise ratio in dB for 8-bit images; infinite when identical.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::LengthMismatch {
            left: a.pixels.len(),
            right: b.pixels.len(),
        });
    }
    let mse = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / a.pixels.len() as f64;
    Ok(10.0 * (255.0f64.powi(2) / mse).log10())
}

/// Low-detail synthetic test image: a soft vignette, a few Gaussian blobs and
/// a gentle diagonal shading.
pub fn test_image(width: usize, height: usize) -> GrayImage {
    let blobs = [
        (0.30, 0.35, 0.12, 70.0),
        (0.70, 0.30, 0.08, -50.0),
        (0.55, 0.70, 0.15, 60.0),
        (0.20, 0.80, 0.06, -40.0),
    ];
    let mut pixels = Vec::with_capacity(width * height);
    for j in 0..height {
        for i in 0..width {
            let x = (i as f64 + 0.5) / width as f64;
            let y = (j as f64 + 0.5) / height as f64;
            let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
            let mut v = 110.0 + 30.0 * (x - y) - 80.0 * r2;
            for &(cx, cy, s, amp) in &blobs {
                v += amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp();
            }
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage {
        width,
        height,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::packet::SelectionRule;

    #[test]
    fn scan_order_is_diagonal() {
        let s = low_frequency_scan(3, 3);
        // (1,0) (0,1) (2,0) (1,1) (0,2) ...
        assert_eq!(&s[..5], &[1, 3, 2, 4, 6]);
        assert_eq!(s.len(), 8);
    }

    #[test]
    fn full_keep_within_quantizer_step() {
        let img = test_image(32, 24);
        let opts = CodecOptions {
            value_bits: 16,
            ..CodecOptions::image(1.0)
        };
        let back = decompress_image(&compress_image(&img, &opts).unwrap()).unwrap();
        for (a, b) in img.pixels.iter().zip(&back.pixels) {
            assert!((*a as i32 - *b as i32).abs() <= 1);
        }
    }

    #[test]
    fn ratio_and_quality_at_16_5_percent() {
        let img = test_image(256, 256);
        let p = compress_image(&img, &CodecOptions::image(0.165)).unwrap();
        let cr = p.compression_ratio();
        assert!((cr / 6.1 - 1.0).abs() < 0.15, "CR {cr}");
        let q = psnr(&img, &decompress_image(&p).unwrap()).unwrap();
        assert!(q > 30.0, "PSNR {q}");
    }

    #[test]
    fn largest_magnitude_also_decodes() {
        let img = test_image(64, 64);
        let opts = CodecOptions {
            selection: SelectionRule::LargestMagnitude,
            ..CodecOptions::image(0.2)
        };
        let q = psnr(&img, &decompress_image(&compress_image(&img, &opts).unwrap()).unwrap()).unwrap();
        assert!(q > 30.0, "PSNR {q}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(GrayImage::new(4, 4, vec![0; 15]).is_err());
        assert!(GrayImage::new(0, 4, vec![]).is_err());
    }
}
