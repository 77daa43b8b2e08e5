//! Shared vocabulary: boxes, images, labeled objects, detections.
//!
//! Box coordinates are continuous pixels, origin top-left, x rightward,
//! y downward, corner form `[xmin, ymin, xmax, ymax]` with exclusive area
//! `(xmax - xmin) * (ymax - ymin)`. The "+1" pixel convention used by some
//! VOC tooling is deliberately not applied.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid box ({xmin}, {ymin}, {xmax}, {ymax}): {reason}")]
    InvalidBox {
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
        reason: &'static str,
    },
    #[error("box ({xmin}, {ymin}, {xmax}, {ymax}) degenerate after clip to {width}x{height}")]
    DegenerateAfterClip {
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
        width: f64,
        height: f64,
    },
    #[error("invalid image dimensions {width}x{height}")]
    InvalidImageDims { width: usize, height: usize },
    #[error("pixel buffer length {got} does not match {width}x{height}")]
    PixelCountMismatch {
        width: usize,
        height: usize,
        got: usize,
    },
    #[error("empty class name")]
    EmptyClassName,
    #[error("detection score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("duplicate image id {0:?} in dataset")]
    DuplicateImageId(String),
    #[error("object box ({xmin}, {ymin}, {xmax}, {ymax}) outside image {width}x{height}")]
    ObjectOutOfBounds {
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
        width: usize,
        height: usize,
    },
}

/// Axis-aligned rectangle in continuous pixel coordinates.
///
/// `xmin < xmax` and `ymin < ymax` always hold; zero-area boxes are rejected
/// at construction because every downstream formula divides by an area or a
/// side length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
}

impl BoundingBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, ModelError> {
        if !(xmin.is_finite() && ymin.is_finite() && xmax.is_finite() && ymax.is_finite()) {
            return Err(ModelError::InvalidBox {
                xmin,
                ymin,
                xmax,
                ymax,
                reason: "non-finite coordinate",
            });
        }
        if xmin >= xmax || ymin >= ymax {
            return Err(ModelError::InvalidBox {
                xmin,
                ymin,
                xmax,
                ymax,
                reason: "zero or negative area",
            });
        }
        Ok(Self {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }
    pub fn ymin(&self) -> f64 {
        self.ymin
    }
    pub fn xmax(&self) -> f64 {
        self.xmax
    }
    pub fn ymax(&self) -> f64 {
        self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.xmin + self.xmax) / 2.0,
            (self.ymin + self.ymax) / 2.0,
        )
    }

    /// Builds a box from center point and side lengths.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, ModelError> {
        Self::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.xmin, self.ymin),
            (self.xmax, self.ymin),
            (self.xmin, self.ymax),
            (self.xmax, self.ymax),
        ]
    }
}

/// Intersection over union of two boxes. Symmetric, 0 for disjoint boxes,
/// 1 for identical ones. Valid boxes have positive area so the union can
/// never be zero.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.xmax.min(b.xmax) - a.xmin.max(b.xmin)).max(0.0);
    let iy = (a.ymax.min(b.ymax) - a.ymin.max(b.ymin)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Clamps a box to `[0, width] x [0, height]`. Boxes that collapse to zero
/// area after clamping are rejected.
pub fn clip_box(b: &BoundingBox, width: f64, height: f64) -> Result<BoundingBox, ModelError> {
    let xmin = b.xmin.clamp(0.0, width);
    let ymin = b.ymin.clamp(0.0, height);
    let xmax = b.xmax.clamp(0.0, width);
    let ymax = b.ymax.clamp(0.0, height);
    if xmin >= xmax || ymin >= ymax {
        return Err(ModelError::DegenerateAfterClip {
            xmin: b.xmin,
            ymin: b.ymin,
            xmax: b.xmax,
            ymax: b.ymax,
            width,
            height,
        });
    }
    BoundingBox::new(xmin, ymin, xmax, ymax)
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::InvalidImageDims { width, height });
        }
        if pixels.len() != width * height {
            return Err(ModelError::PixelCountMismatch {
                width,
                height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ModelError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x] = value;
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// One labeled object inside an image. `difficult` marks dim-contrast hard
/// cases which evaluation neither rewards nor penalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledObject {
    pub class_name: String,
    pub box_: BoundingBox,
    pub difficult: bool,
}

impl LabeledObject {
    pub fn new(
        class_name: impl Into<String>,
        box_: BoundingBox,
        difficult: bool,
    ) -> Result<Self, ModelError> {
        let class_name = class_name.into();
        if class_name.is_empty() {
            return Err(ModelError::EmptyClassName);
        }
        Ok(Self {
            class_name,
            box_,
            difficult,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// A radiograph plus its annotations. The pixel payload may live on disk;
/// annotation-only workflows carry just the path.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageRef {
    Loaded(GrayImage),
    Path(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedImage {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub image: ImageRef,
    pub objects: Vec<LabeledObject>,
    pub split: Split,
}

impl AnnotatedImage {
    /// Validates that every object's box lies within the image bounds.
    pub fn validate(&self) -> Result<(), ModelError> {
        for obj in &self.objects {
            let b = &obj.box_;
            if b.xmin() < 0.0
                || b.ymin() < 0.0
                || b.xmax() > self.width as f64
                || b.ymax() > self.height as f64
            {
                return Err(ModelError::ObjectOutOfBounds {
                    xmin: b.xmin(),
                    ymin: b.ymin(),
                    xmax: b.xmax(),
                    ymax: b.ymax(),
                    width: self.width,
                    height: self.height,
                });
            }
        }
        Ok(())
    }
}

/// Checks id uniqueness across a dataset.
pub fn check_unique_ids(images: &[AnnotatedImage]) -> Result<(), ModelError> {
    let mut seen = std::collections::HashSet::new();
    for img in images {
        if !seen.insert(img.id.as_str()) {
            return Err(ModelError::DuplicateImageId(img.id.clone()));
        }
    }
    Ok(())
}

/// A scored candidate box emitted by a detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub class_name: String,
    pub score: f64,
    pub box_: BoundingBox,
}

impl Detection {
    pub fn new(
        image_id: impl Into<String>,
        class_name: impl Into<String>,
        score: f64,
        box_: BoundingBox,
    ) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(ModelError::ScoreOutOfRange(score));
        }
        Ok(Self {
            image_id: image_id.into(),
            class_name: class_name.into(),
            score,
            box_,
        })
    }
}
