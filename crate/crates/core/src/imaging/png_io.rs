use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::{decode_transfer, encode_transfer, EncodedImage, ImagingError, LinearImage, Result};

fn png_err(e: impl std::fmt::Display) -> ImagingError {
    ImagingError::Png(e.to_string())
}

/// Writes a 16-bit RGB PNG, gamma-encoding with `1/gamma` and clamping to
/// the displayable range.
pub fn write_png16(path: impl AsRef<Path>, image: &LinearImage, gamma: f64) -> Result<()> {
    let path = path.as_ref();
    let encoded = encode_transfer(image, gamma)?;
    let file = File::create(path).map_err(|source| ImagingError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        image.width() as u32,
        image.height() as u32,
    );
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header().map_err(png_err)?;
    let mut bytes = Vec::with_capacity(encoded.data().len() * 6);
    for px in encoded.data() {
        for v in px {
            let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
            bytes.extend_from_slice(&q.to_be_bytes());
        }
    }
    writer.write_image_data(&bytes).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

/// Reads an 8- or 16-bit gray/RGB(A) PNG and linearizes it with `gamma`.
pub fn read_png(path: impl AsRef<Path>, gamma: f64) -> Result<LinearImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ImagingError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| png_err("image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (width, height) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => return Err(png_err(format!("unsupported color type {other:?}"))),
    };
    let sample = |i: usize| -> f32 {
        match info.bit_depth {
            png::BitDepth::Sixteen => {
                u16::from_be_bytes([buf[2 * i], buf[2 * i + 1]]) as f32 / 65535.0
            }
            _ => buf[i] as f32 / 255.0,
        }
    };
    let mut data = Vec::with_capacity(width * height);
    for p in 0..width * height {
        let base = p * channels;
        data.push(if channels < 3 {
            [sample(base); 3]
        } else {
            [sample(base), sample(base + 1), sample(base + 2)]
        });
    }
    decode_transfer(&EncodedImage::new(width, height, data)?, gamma)
}
