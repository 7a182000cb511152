//! Binary PPM (P6) / PGM (P5) image I/O and the YIQ color transform.
//! Pixels are held as f64 in [0,1]; writers clamp before quantizing.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// A planar image: `channels` is 1 (gray) or 3 (RGB), data is row-major
/// interleaved (`(r, g, b)` per pixel for color).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParam(format!(
                "images must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape {
                context: "Image::new",
                expected: width * height * channels,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Extract one channel as a plane.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        assert!(c < self.channels);
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }
}

fn read_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    // Skip whitespace and '#' comments.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse("truncated image header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn read_netpbm(path: &Path, magic: &str, channels: usize) -> Result<Image> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0;
    let m = read_token(&bytes, &mut pos)?;
    if m != magic {
        return Err(Error::Parse(format!(
            "expected {magic} image, found magic {m:?}"
        )));
    }
    let width: usize = read_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::Parse("bad image width".into()))?;
    let height: usize = read_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::Parse("bad image height".into()))?;
    let maxval: usize = read_token(&bytes, &mut pos)?
        .parse()
        .map_err(|_| Error::Parse("bad image maxval".into()))?;
    if maxval != 255 {
        return Err(Error::Parse(format!(
            "only 8-bit images are supported (maxval 255), got {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width * height * channels;
    if bytes.len() < pos + need {
        return Err(Error::Parse(format!(
            "image raster truncated: need {need} bytes, have {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    let data = bytes[pos..pos + need]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    Image::new(width, height, channels, data)
}

fn write_netpbm(path: &Path, img: &Image, magic: &str) -> Result<()> {
    let mut out = Vec::with_capacity(img.data.len() + 32);
    out.extend_from_slice(format!("{magic}\n{} {}\n255\n", img.width, img.height).as_bytes());
    for &v in &img.data {
        out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    std::fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<Image> {
    read_netpbm(path, "P6", 3)
}

pub fn write_ppm(path: &Path, img: &Image) -> Result<()> {
    if img.channels != 3 {
        return Err(Error::InvalidParam("PPM output needs 3 channels".into()));
    }
    write_netpbm(path, img, "P6")
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    read_netpbm(path, "P5", 1)
}

pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    if img.channels != 1 {
        return Err(Error::InvalidParam("PGM output needs 1 channel".into()));
    }
    write_netpbm(path, img, "P5")
}

/// NTSC luminance/chrominance matrix.
const YIQ: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [0.596, -0.274, -0.322],
    [0.211, -0.523, 0.312],
];

fn invert_3x3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let c = |r: usize, cidx: usize| -> f64 {
        let (r1, r2) = match r {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (c1, c2) = match cidx {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let minor = m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1];
        let sign = if (r + cidx) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor
    };
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for col in 0..3 {
            // Adjugate is the transpose of the cofactor matrix.
            inv[r][col] = c(col, r) / det;
        }
    }
    inv
}

pub fn rgb_to_yiq(rgb: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(&YIQ) {
        *o = row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2];
    }
    out
}

pub fn yiq_to_rgb(yiq: [f64; 3]) -> [f64; 3] {
    let inv = invert_3x3(&YIQ);
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(&inv) {
        *o = row[0] * yiq[0] + row[1] * yiq[1] + row[2] * yiq[2];
    }
    out
}

/// Split an RGB image into Y, I, Q planes.
pub fn image_to_yiq_planes(img: &Image) -> Result<[Vec<f64>; 3]> {
    if img.channels != 3 {
        return Err(Error::InvalidParam("YIQ split needs an RGB image".into()));
    }
    let n = img.width * img.height;
    let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for p in 0..n {
        let rgb = [img.data[3 * p], img.data[3 * p + 1], img.data[3 * p + 2]];
        let yiq = rgb_to_yiq(rgb);
        for c in 0..3 {
            planes[c][p] = yiq[c];
        }
    }
    Ok(planes)
}

/// Reassemble an RGB image from Y, I, Q planes.
pub fn yiq_planes_to_image(
    width: usize,
    height: usize,
    planes: &[Vec<f64>; 3],
) -> Result<Image> {
    let n = width * height;
    for p in planes {
        if p.len() != n {
            return Err(Error::Shape {
                context: "yiq_planes_to_image",
                expected: n,
                got: p.len(),
            });
        }
    }
    let mut data = vec![0.0; 3 * n];
    for p in 0..n {
        let rgb = yiq_to_rgb([planes[0][p], planes[1][p], planes[2][p]]);
        data[3 * p..3 * p + 3].copy_from_slice(&rgb);
    }
    Image::new(width, height, 3, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn yiq_matrix_matches_definition() {
        let [y, i, q] = rgb_to_yiq([1.0, 0.0, 0.0]);
        assert!((y - 0.299).abs() < 1e-12);
        assert!((i - 0.596).abs() < 1e-12);
        assert!((q - 0.211).abs() < 1e-12);
    }

    #[test]
    fn yiq_round_trip_random_pixels() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..1000 {
            let rgb = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            let back = yiq_to_rgb(rgb_to_yiq(rgb));
            for c in 0..3 {
                assert!((rgb[c] - back[c]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn ppm_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.ppm");
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let data: Vec<f64> = (0..4 * 3 * 3)
            .map(|_| (rng.gen_range(0..=255u8)) as f64 / 255.0)
            .collect();
        let img = Image::new(4, 3, 3, data).unwrap();
        write_ppm(&path, &img).unwrap();
        let back = read_ppm(&path).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn pgm_round_trip_and_clamping() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let img = Image::new(2, 1, 1, vec![-0.5, 1.7]).unwrap();
        write_pgm(&path, &img).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back.data, vec![0.0, 1.0]);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.ppm");
        std::fs::write(&path, b"P3\n1 1\n255\n0 0 0\n").unwrap();
        assert!(read_ppm(&path).is_err());
    }
}
