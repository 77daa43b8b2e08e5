//! End-to-end desk-scale pipeline for bullet radiographs: synthesize
//! annotated images, serialize them (VOC XML, CSV, length-prefixed records),
//! generate and match SSD default boxes, evaluate detections (AP / mAP /
//! AR@1), train a small classifier with a freeze-pretrain-finetune schedule,
//! render class-activation overlays, and rank studies by bullet count.

pub mod model;
pub mod rng;

pub use model::{
    check_unique_ids, clip_box, iou, AnnotatedImage, BoundingBox, Detection, GrayImage, ImageRef,
    LabeledObject, ModelError, Split,
};
