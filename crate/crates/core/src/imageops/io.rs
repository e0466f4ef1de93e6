use std::io::Cursor;
use std::path::Path;

use image::{ColorType, DynamicImage, ImageBuffer, ImageEncoder, Luma};
use image::codecs::png::{CompressionType, FilterType, PngEncoder};

use super::{ImageOpsError, RasterImage};

fn io_err(path: &Path, e: impl std::fmt::Display) -> ImageOpsError {
    ImageOpsError::Io(format!("{}: {e}", path.display()))
}

fn decode(path: &Path) -> Result<DynamicImage, ImageOpsError> {
    let reader = image::ImageReader::open(path)
        .map_err(|e| io_err(path, e))?
        .with_guessed_format()
        .map_err(|e| io_err(path, e))?;
    reader.decode().map_err(|e| io_err(path, e))
}

/// Reads any 8/16-bit PNG or JPEG as 8-bit RGB (alpha dropped).
pub fn read_rgb(path: &Path) -> Result<RasterImage, ImageOpsError> {
    let img = decode(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    RasterImage::new(w as usize, h as usize, 3, img.into_raw())
}

/// Reads a single-channel 8-bit image, converting color input to luma.
pub fn read_gray(path: &Path) -> Result<RasterImage, ImageOpsError> {
    let img = decode(path)?.to_luma8();
    let (w, h) = img.dimensions();
    RasterImage::new(w as usize, h as usize, 1, img.into_raw())
}

/// Label-style read: 16-bit values are preserved, 8-bit gray widened, and
/// color images mapped to 24-bit packed RGB keys.
pub fn read_labels(path: &Path) -> Result<(usize, usize, Vec<u32>), ImageOpsError> {
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = match img.color() {
        ColorType::L8 | ColorType::La8 => img.to_luma8().into_raw().into_iter().map(u32::from).collect(),
        ColorType::L16 | ColorType::La16 => img.to_luma16().into_raw().into_iter().map(u32::from).collect(),
        _ => img
            .to_rgb8()
            .into_raw()
            .chunks_exact(3)
            .map(|p| u32::from(p[0]) << 16 | u32::from(p[1]) << 8 | u32::from(p[2]))
            .collect(),
    };
    Ok((w, h, values))
}

fn encode_png(width: usize, height: usize, bytes: &[u8], color: image::ExtendedColorType) -> Result<Vec<u8>, ImageOpsError> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(Cursor::new(&mut out), CompressionType::Fast, FilterType::Adaptive)
        .write_image(bytes, width as u32, height as u32, color)
        .map_err(|e| ImageOpsError::Io(e.to_string()))?;
    Ok(out)
}

/// PNG bytes for a 1- or 3-channel 8-bit image.
pub fn encode_png8(image: &RasterImage) -> Result<Vec<u8>, ImageOpsError> {
    let color = if image.channels() == 3 {
        image::ExtendedColorType::Rgb8
    } else {
        image::ExtendedColorType::L8
    };
    encode_png(image.width(), image.height(), image.data(), color)
}

/// PNG bytes for 16-bit grayscale samples.
pub fn encode_png16(width: usize, height: usize, values: &[u16]) -> Result<Vec<u8>, ImageOpsError> {
    assert_eq!(values.len(), width * height);
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(width as u32, height as u32, values.to_vec()).expect("buffer size checked");
    let bytes: Vec<u8> = buf.into_raw().iter().flat_map(|v| v.to_ne_bytes()).collect();
    encode_png(width, height, &bytes, image::ExtendedColorType::L16)
}

pub fn decode_png_rgb(bytes: &[u8]) -> Result<RasterImage, ImageOpsError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| ImageOpsError::Io(e.to_string()))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    RasterImage::new(w as usize, h as usize, 3, img.into_raw())
}

pub fn write_png(path: &Path, image: &RasterImage) -> Result<(), ImageOpsError> {
    let bytes = encode_png8(image)?;
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn write_png16(path: &Path, width: usize, height: usize, values: &[u16]) -> Result<(), ImageOpsError> {
    let bytes = encode_png16(width, height, values)?;
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}
