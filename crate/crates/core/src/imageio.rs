//! Thin PNG helpers over the `png` crate.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};

/// A decoded single-channel 16-bit image.
pub struct Gray16 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
}

fn encoding_error(path: &Path, reason: impl ToString) -> Error {
    Error::BadEncoding {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

pub fn read_gray16(path: &Path) -> Result<Gray16> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder
        .read_info()
        .map_err(|e| encoding_error(path, e))?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Grayscale || depth != png::BitDepth::Sixteen {
        return Err(encoding_error(
            path,
            format!("expected 16-bit grayscale, found {color:?} at {depth:?}"),
        ));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| encoding_error(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| encoding_error(path, e))?;
    let (width, height) = (info.width as usize, info.height as usize);
    let bytes = &buf[..info.buffer_size()];
    let data = bytes
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect::<Vec<_>>();
    debug_assert_eq!(data.len(), width * height);
    Ok(Gray16 {
        width,
        height,
        data,
    })
}

fn write_png(
    path: &Path,
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    bytes: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(depth);
    encoder.set_compression(png::Compression::Fast);
    let to_io = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => encoding_error(path, other),
    };
    let mut writer = encoder.write_header().map_err(to_io)?;
    writer.write_image_data(bytes).map_err(to_io)?;
    writer.finish().map_err(to_io)
}

pub fn write_gray16(path: &Path, width: usize, height: usize, data: &[u16]) -> Result<()> {
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_be_bytes()).collect();
    write_png(
        path,
        width,
        height,
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &bytes,
    )
}

/// Writes interleaved 8-bit RGB.
pub fn write_rgb8(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    write_png(
        path,
        width,
        height,
        png::ColorType::Rgb,
        png::BitDepth::Eight,
        rgb,
    )
}
