//! Grayscale images: PGM (P2 and P5, 8 or 16 bit) and PNG.

use std::fmt::Write as _;
use std::io::Cursor;
use std::path::Path;

use thiserror::Error;

/// Refuse rasters larger than this many pixels.
pub const MAX_PIXELS: usize = 1 << 28;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("bit-depth mismatch: {0}")]
    BitDepth(String),
    #[error("dimension overflow: {width} x {height}")]
    Overflow { width: usize, height: usize },
    #[error("truncated raster: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unsupported image: {0}")]
    Unsupported(String),
    #[error("png: {0}")]
    Png(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

/// Row-major grayscale raster with intensities in `0..=maxval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    maxval: u16,
    pixels: Vec<u16>,
}

fn check_dims(width: usize, height: usize) -> Result<usize, ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::Header(format!("empty image {width} x {height}")));
    }
    match width.checked_mul(height) {
        Some(n) if n <= MAX_PIXELS => Ok(n),
        _ => Err(ImageError::Overflow { width, height }),
    }
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self, ImageError> {
        let n = check_dims(width, height)?;
        if maxval == 0 {
            return Err(ImageError::BitDepth("maxval must be positive".into()));
        }
        if pixels.len() != n {
            return Err(ImageError::Truncated { expected: n, found: pixels.len() });
        }
        if let Some(p) = pixels.iter().find(|&&p| p > maxval) {
            return Err(ImageError::BitDepth(format!("intensity {p} exceeds maxval {maxval}")));
        }
        Ok(Self { width, height, maxval, pixels })
    }

    pub fn filled(width: usize, height: usize, maxval: u16, value: u16) -> Result<Self, ImageError> {
        let n = check_dims(width, height)?;
        Self::new(width, height, maxval, vec![value; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    pub fn depth(&self) -> BitDepth {
        if self.maxval <= 255 {
            BitDepth::Eight
        } else {
            BitDepth::Sixteen
        }
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }
}

/// On-disk encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    PgmAscii,
    PgmBinary,
    Png,
}

impl Format {
    /// `.pgm` means binary PGM.
    pub fn from_path(path: &Path) -> Result<Self, ImageError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("pgm") => Ok(Format::PgmBinary),
            Some("png") => Ok(Format::Png),
            other => Err(ImageError::Unsupported(format!("file extension {other:?}"))),
        }
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, ImageError> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::Header(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Header(format!("{what} out of range")))
    }
}

/// Parses a P2 or P5 file.
pub fn parse_pgm(bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'2' | b'5') {
        return Err(ImageError::Header("missing P2/P5 magic".into()));
    }
    let binary = bytes[1] == b'5';
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(ImageError::BitDepth(format!("maxval {maxval} outside 1..=65535")));
    }
    let maxval = maxval as u16;
    let n = check_dims(width, height)?;
    let mut pixels = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates header and raster
        if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
            return Err(ImageError::Header("no whitespace after maxval".into()));
        }
        let raster = &bytes[h.pos + 1..];
        let wide = maxval > 255;
        let found = if wide { raster.len() / 2 } else { raster.len() };
        if found < n {
            return Err(ImageError::Truncated { expected: n, found });
        }
        if wide {
            pixels.extend(raster.chunks_exact(2).take(n).map(|c| u16::from_be_bytes([c[0], c[1]])));
        } else {
            pixels.extend(raster[..n].iter().map(|&b| b as u16));
        }
    } else {
        for k in 0..n {
            h.skip_space();
            if h.pos >= bytes.len() {
                return Err(ImageError::Truncated { expected: n, found: k });
            }
            let v = h.number("sample")?;
            if v > maxval as usize {
                return Err(ImageError::BitDepth(format!("sample {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as u16);
        }
    }
    ImageBuffer::new(width, height, maxval, pixels)
}

pub fn encode_pgm(image: &ImageBuffer, ascii: bool) -> Vec<u8> {
    let mut out = format!("{}\n{} {}\n{}\n", if ascii { "P2" } else { "P5" }, image.width, image.height, image.maxval)
        .into_bytes();
    if ascii {
        let mut text = String::new();
        for row in image.pixels.chunks(image.width) {
            let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            writeln!(text, "{}", line.join(" ")).unwrap();
        }
        out.extend_from_slice(text.as_bytes());
    } else if image.depth() == BitDepth::Eight {
        out.extend(image.pixels.iter().map(|&p| p as u8));
    } else {
        out.extend(image.pixels.iter().flat_map(|p| p.to_be_bytes()));
    }
    out
}

pub fn parse_png(bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| ImageError::Png(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        image::DynamicImage::ImageLuma8(b) => {
            ImageBuffer::new(w, h, 255, b.into_raw().into_iter().map(u16::from).collect())
        }
        image::DynamicImage::ImageLuma16(b) => ImageBuffer::new(w, h, 65535, b.into_raw()),
        other => Err(ImageError::Unsupported(format!("color type {:?}", other.color()))),
    }
}

/// PNG stores only full 8- or 16-bit ranges.
pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>, ImageError> {
    let (w, h) = (img.width as u32, img.height as u32);
    let dynamic = match img.maxval {
        255 => image::DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w, h, img.pixels.iter().map(|&p| p as u8).collect())
                .ok_or_else(|| ImageError::Png("raster size".into()))?,
        ),
        65535 => image::DynamicImage::ImageLuma16(
            image::ImageBuffer::from_raw(w, h, img.pixels.clone()).ok_or_else(|| ImageError::Png("raster size".into()))?,
        ),
        m => return Err(ImageError::BitDepth(format!("PNG needs maxval 255 or 65535, got {m}"))),
    };
    let mut out = Cursor::new(Vec::new());
    dynamic.write_to(&mut out, image::ImageFormat::Png).map_err(|e| ImageError::Png(e.to_string()))?;
    Ok(out.into_inner())
}

/// Decodes by content: PGM magic or PNG signature.
pub fn decode(bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
    if bytes.starts_with(b"\x89PNG") {
        parse_png(bytes)
    } else {
        parse_pgm(bytes)
    }
}

pub fn encode(img: &ImageBuffer, format: Format) -> Result<Vec<u8>, ImageError> {
    match format {
        Format::PgmAscii => Ok(encode_pgm(img, true)),
        Format::PgmBinary => Ok(encode_pgm(img, false)),
        Format::Png => encode_png(img),
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer, ImageError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ImageError::Io { path: path.display().to_string(), source })?;
    decode(&bytes)
}

/// Format from the extension: `.pgm` (binary) or `.png`.
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let path = path.as_ref();
    let bytes = encode(img, Format::from_path(path)?)?;
    std::fs::write(path, bytes).map_err(|source| ImageError::Io { path: path.display().to_string(), source })
}
