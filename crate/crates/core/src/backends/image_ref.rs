use std::borrow::Cow;
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageSource {
    Generated,
    Original,
    Mock,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImageData {
    Pixels(RgbImage),
    Path(PathBuf),
}

/// An image handed between pipeline stages: either decoded pixels or a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRef {
    pub id: String,
    pub data: ImageData,
    pub source: ImageSource,
}

impl ImageRef {
    pub fn from_pixels(id: impl Into<String>, pixels: RgbImage, source: ImageSource) -> Result<Self> {
        if pixels.width() == 0 || pixels.height() == 0 {
            return Err(Error::Precondition("image has a zero dimension".into()));
        }
        Ok(Self {
            id: id.into(),
            data: ImageData::Pixels(pixels),
            source,
        })
    }

    pub fn from_path(id: impl Into<String>, path: impl Into<PathBuf>, source: ImageSource) -> Self {
        Self {
            id: id.into(),
            data: ImageData::Path(path.into()),
            source,
        }
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.data {
            ImageData::Path(p) => Some(p),
            ImageData::Pixels(_) => None,
        }
    }

    /// Decoded RGB pixels, reading the file if necessary.
    pub fn rgb(&self) -> Result<Cow<'_, RgbImage>> {
        match &self.data {
            ImageData::Pixels(p) => Ok(Cow::Borrowed(p)),
            ImageData::Path(path) => {
                let img = image::open(path).map_err(|e| Error::Decode {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                Ok(Cow::Owned(img.to_rgb8()))
            }
        }
    }

    /// Write the pixels as a lossless PNG and return a path-backed reference.
    pub fn save_png(&self, path: &Path) -> Result<ImageRef> {
        let pixels = self.rgb()?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        }
        pixels
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::io(format!("writing {}", path.display()), std::io::Error::other(e)))?;
        Ok(ImageRef::from_path(self.id.clone(), path, self.source))
    }

    /// Same image content, ignoring ids and storage form.
    pub fn same_pixels(&self, other: &ImageRef) -> Result<bool> {
        Ok(*self.rgb()? == *other.rgb()?)
    }
}
