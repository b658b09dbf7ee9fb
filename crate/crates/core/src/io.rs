//! PNG and binary PGM/PPM reading and writing.
//!
//! Label maps are stored as 8-bit gray with foreground 0 and background 255.

use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::image::{BinaryMap, ColorImage, GrayImage};
use crate::labeling::{CorrectionLayer, SourceImage};

fn open(path: &Path) -> Result<DynamicImage> {
    let reader = image::ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn is_gray(img: &DynamicImage) -> bool {
    matches!(
        img,
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_)
    )
}

fn from_rgb(path: &Path, img: DynamicImage) -> Result<ColorImage> {
    let rgb = img.into_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    ColorImage::from_vec(w, h, rgb.into_raw()).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn from_luma(path: &Path, img: DynamicImage) -> Result<GrayImage> {
    let l = img.into_luma8();
    let (w, h) = (l.width() as usize, l.height() as usize);
    GrayImage::from_vec(w, h, l.into_raw()).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads any supported image as a source, keeping color when present.
pub fn read_source(path: impl AsRef<Path>) -> Result<SourceImage> {
    let path = path.as_ref();
    let img = open(path)?;
    if is_gray(&img) {
        Ok(SourceImage::Gray(from_luma(path, img)?))
    } else {
        Ok(SourceImage::Color(from_rgb(path, img)?))
    }
}

/// Reads an image as gray; color input goes through BT.601 luma.
pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    Ok(read_source(path)?.to_gray())
}

pub fn read_color(path: impl AsRef<Path>) -> Result<ColorImage> {
    let path = path.as_ref();
    from_rgb(path, open(path)?)
}

pub fn read_binary_map(path: impl AsRef<Path>) -> Result<BinaryMap> {
    Ok(BinaryMap::from_gray(&read_gray(path)?))
}

pub fn read_correction_layer(path: impl AsRef<Path>) -> Result<CorrectionLayer> {
    let path = path.as_ref();
    let img = open(path)?;
    // Correction values are exact codes; never pass them through luma.
    CorrectionLayer::from_gray(&from_luma(path, img)?)
}

fn format_for(path: &Path) -> ImageFormat {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("pgm") | Some("ppm") | Some("pnm") => ImageFormat::Pnm,
        _ => ImageFormat::Png,
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    Ok(())
}

pub fn write_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ensure_parent(path)?;
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.as_slice().to_vec())
        .expect("buffer length matches dimensions");
    buf.save_with_format(path, format_for(path)).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_color(img: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ensure_parent(path)?;
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.as_slice().to_vec())
        .expect("buffer length matches dimensions");
    buf.save_with_format(path, format_for(path)).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_source(src: &SourceImage, path: impl AsRef<Path>) -> Result<()> {
    match src {
        SourceImage::Color(c) => write_color(c, path),
        SourceImage::Gray(g) => write_gray(g, path),
    }
}

pub fn write_binary_map(map: &BinaryMap, path: impl AsRef<Path>) -> Result<()> {
    write_gray(&map.to_gray(), path)
}
