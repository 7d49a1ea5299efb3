//! Portable float map: `PF` (RGB) or `Pf` (gray) header, `width height`,
//! then a scale line whose sign gives the byte order (negative means
//! little-endian). Rows are stored bottom-to-top.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ImagingError, LinearImage, Result};

fn pfm_err(msg: impl Into<String>) -> ImagingError {
    ImagingError::Pfm(msg.into())
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<LinearImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ImagingError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_pfm_from(BufReader::new(file))
}

/// Reads the next whitespace-delimited header token and consumes exactly one
/// trailing whitespace byte.
fn header_token(reader: &mut impl Read) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if reader.read(&mut byte).map_err(|e| pfm_err(e.to_string()))? == 0 {
            return Err(pfm_err("truncated header"));
        }
        if byte[0].is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(byte[0]);
        if token.len() > 32 {
            return Err(pfm_err("malformed header"));
        }
    }
    String::from_utf8(token).map_err(|_| pfm_err("non-ASCII header"))
}

pub fn read_pfm_from(mut reader: impl Read) -> Result<LinearImage> {
    let channels = match header_token(&mut reader)?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(pfm_err(format!("bad magic {other:?}"))),
    };
    let width: usize = header_token(&mut reader)?
        .parse()
        .map_err(|_| pfm_err("bad width"))?;
    let height: usize = header_token(&mut reader)?
        .parse()
        .map_err(|_| pfm_err("bad height"))?;
    let scale: f32 = header_token(&mut reader)?
        .parse()
        .map_err(|_| pfm_err("bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(pfm_err("scale must be non-zero"));
    }
    let little_endian = scale < 0.0;

    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| pfm_err("image too large"))?;
    let mut bytes = vec![0u8; count * 4];
    reader
        .read_exact(&mut bytes)
        .map_err(|_| pfm_err("truncated pixel data"))?;

    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little_endian {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();

    let mut data = vec![[0.0f32; 3]; width * height];
    for file_row in 0..height {
        let y = height - 1 - file_row;
        for x in 0..width {
            let src = (file_row * width + x) * channels;
            data[y * width + x] = if channels == 3 {
                [values[src], values[src + 1], values[src + 2]]
            } else {
                [values[src]; 3]
            };
        }
    }
    LinearImage::new(width, height, data)
}

pub fn write_pfm(path: impl AsRef<Path>, image: &LinearImage) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| ImagingError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    write_pfm_to(&mut writer, image)?;
    writer.flush().map_err(io_err)
}

/// Writes a little-endian RGB PFM.
pub fn write_pfm_to(mut writer: impl Write, image: &LinearImage) -> Result<()> {
    let (w, h) = (image.width(), image.height());
    let mut buf = Vec::with_capacity(32 + w * h * 12);
    buf.extend_from_slice(format!("PF\n{w} {h}\n-1.0\n").as_bytes());
    for y in (0..h).rev() {
        for x in 0..w {
            for v in image.pixel(x, y) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    writer
        .write_all(&buf)
        .map_err(|e| pfm_err(e.to_string()))
}
