//! Pascal-VOC XML annotation documents, one per image.
//!
//! `bndbox` coordinates are serialized as integers (rounding half-up from the
//! in-memory continuous boxes) because the VOC schema and common labeling
//! tools emit integers. Unknown elements are ignored on read and never
//! re-emitted.

use quick_xml::events::Event;
use quick_xml::Reader;
use thiserror::Error;

use crate::model::{AnnotatedImage, BoundingBox, LabeledObject, ModelError, Split};

#[derive(Debug, Error)]
pub enum VocError {
    #[error("malformed xml: {0}")]
    Xml(String),
    #[error("missing required element {0}")]
    MissingElement(String),
    #[error("non-integer coordinate at {path}: {value:?}")]
    BadInteger { path: String, value: String },
    #[error("coordinate out of bounds at {path}: {detail}")]
    OutOfBounds { path: String, detail: String },
    #[error("invalid dimensions at {path}: {detail}")]
    BadDimensions { path: String, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocObject {
    pub name: String,
    pub pose: String,
    pub truncated: bool,
    pub difficult: bool,
    pub xmin: i64,
    pub ymin: i64,
    pub xmax: i64,
    pub ymax: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocDocument {
    pub folder: String,
    pub filename: String,
    pub path: String,
    pub width: i64,
    pub height: i64,
    pub depth: i64,
    pub objects: Vec<VocObject>,
}

impl VocDocument {
    pub fn validate(&self) -> Result<(), VocError> {
        if self.width <= 0 || self.height <= 0 || self.depth <= 0 {
            return Err(VocError::BadDimensions {
                path: "size".into(),
                detail: format!(
                    "width={} height={} depth={}",
                    self.width, self.height, self.depth
                ),
            });
        }
        for (i, obj) in self.objects.iter().enumerate() {
            let ctx = |leaf: &str| format!("object[{i}]/bndbox/{leaf}");
            if obj.xmin < 0 {
                return Err(VocError::OutOfBounds {
                    path: ctx("xmin"),
                    detail: format!("{} < 0", obj.xmin),
                });
            }
            if obj.ymin < 0 {
                return Err(VocError::OutOfBounds {
                    path: ctx("ymin"),
                    detail: format!("{} < 0", obj.ymin),
                });
            }
            if obj.xmax > self.width {
                return Err(VocError::OutOfBounds {
                    path: ctx("xmax"),
                    detail: format!("{} > width {}", obj.xmax, self.width),
                });
            }
            if obj.ymax > self.height {
                return Err(VocError::OutOfBounds {
                    path: ctx("ymax"),
                    detail: format!("{} > height {}", obj.ymax, self.height),
                });
            }
            if obj.xmin >= obj.xmax || obj.ymin >= obj.ymax {
                return Err(VocError::OutOfBounds {
                    path: ctx("xmax"),
                    detail: format!(
                        "empty box ({}, {}, {}, {})",
                        obj.xmin, obj.ymin, obj.xmax, obj.ymax
                    ),
                });
            }
        }
        Ok(())
    }

    /// Builds a document from an annotated image, rounding box coordinates
    /// half-up to integers.
    pub fn from_annotated(img: &AnnotatedImage, folder: &str) -> Result<Self, VocError> {
        let filename = format!("{}.png", img.id);
        let objects = img
            .objects
            .iter()
            .map(|o| VocObject {
                name: o.class_name.clone(),
                pose: "Unspecified".into(),
                truncated: false,
                difficult: o.difficult,
                xmin: o.box_.xmin().round() as i64,
                ymin: o.box_.ymin().round() as i64,
                xmax: o.box_.xmax().round() as i64,
                ymax: o.box_.ymax().round() as i64,
            })
            .collect();
        let doc = VocDocument {
            folder: folder.to_string(),
            filename: filename.clone(),
            path: if folder.is_empty() {
                filename
            } else {
                format!("{folder}/{filename}")
            },
            width: img.width as i64,
            height: img.height as i64,
            depth: 1,
            objects,
        };
        doc.validate()?;
        Ok(doc)
    }

    /// Converts back to an annotated image with a path reference. The image
    /// id is the filename stem.
    pub fn to_annotated(&self, split: Split) -> Result<AnnotatedImage, VocError> {
        self.validate()?;
        let id = self
            .filename
            .strip_suffix(".png")
            .unwrap_or(&self.filename)
            .to_string();
        let objects = self
            .objects
            .iter()
            .map(|o| {
                let b = BoundingBox::new(
                    o.xmin as f64,
                    o.ymin as f64,
                    o.xmax as f64,
                    o.ymax as f64,
                )?;
                LabeledObject::new(o.name.clone(), b, o.difficult)
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(AnnotatedImage {
            id,
            width: self.width as usize,
            height: self.height as usize,
            image: crate::model::ImageRef::Path(self.path.clone()),
            objects,
            split,
        })
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Serializes a document. Emits only the defined field set, tab-indented.
pub fn write_voc(doc: &VocDocument) -> Result<Vec<u8>, VocError> {
    doc.validate()?;
    let mut out = String::new();
    out.push_str("<annotation>\n");
    out.push_str(&format!("\t<folder>{}</folder>\n", escape_xml(&doc.folder)));
    out.push_str(&format!(
        "\t<filename>{}</filename>\n",
        escape_xml(&doc.filename)
    ));
    out.push_str(&format!("\t<path>{}</path>\n", escape_xml(&doc.path)));
    out.push_str("\t<size>\n");
    out.push_str(&format!("\t\t<width>{}</width>\n", doc.width));
    out.push_str(&format!("\t\t<height>{}</height>\n", doc.height));
    out.push_str(&format!("\t\t<depth>{}</depth>\n", doc.depth));
    out.push_str("\t</size>\n");
    for obj in &doc.objects {
        out.push_str("\t<object>\n");
        out.push_str(&format!("\t\t<name>{}</name>\n", escape_xml(&obj.name)));
        out.push_str(&format!("\t\t<pose>{}</pose>\n", escape_xml(&obj.pose)));
        out.push_str(&format!(
            "\t\t<truncated>{}</truncated>\n",
            obj.truncated as u8
        ));
        out.push_str(&format!(
            "\t\t<difficult>{}</difficult>\n",
            obj.difficult as u8
        ));
        out.push_str("\t\t<bndbox>\n");
        out.push_str(&format!("\t\t\t<xmin>{}</xmin>\n", obj.xmin));
        out.push_str(&format!("\t\t\t<ymin>{}</ymin>\n", obj.ymin));
        out.push_str(&format!("\t\t\t<xmax>{}</xmax>\n", obj.xmax));
        out.push_str(&format!("\t\t\t<ymax>{}</ymax>\n", obj.ymax));
        out.push_str("\t\t</bndbox>\n");
        out.push_str("\t</object>\n");
    }
    out.push_str("</annotation>\n");
    Ok(out.into_bytes())
}

#[derive(Default)]
struct RawObject {
    name: Option<String>,
    pose: Option<String>,
    truncated: Option<String>,
    difficult: Option<String>,
    xmin: Option<String>,
    ymin: Option<String>,
    xmax: Option<String>,
    ymax: Option<String>,
}

/// Parses a VOC document, collecting the defined field set and ignoring
/// everything else.
pub fn read_voc(bytes: &[u8]) -> Result<VocDocument, VocError> {
    let mut reader = Reader::from_reader(bytes);
    let mut buf = Vec::new();
    let mut path: Vec<String> = Vec::new();
    let mut folder = None;
    let mut filename = None;
    let mut doc_path = None;
    let mut width = None;
    let mut height = None;
    let mut depth = None;
    let mut objects: Vec<RawObject> = Vec::new();

    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                if path.len() == 1 && name == "object" {
                    objects.push(RawObject::default());
                }
                path.push(name);
            }
            Ok(Event::Empty(_)) => {}
            Ok(Event::End(_)) => {
                path.pop();
            }
            Ok(Event::Text(t)) => {
                let text = t
                    .decode()
                    .map_err(|e| VocError::Xml(e.to_string()))?
                    .trim()
                    .to_string();
                if text.is_empty() {
                    continue;
                }
                let joined = path.get(1..).unwrap_or(&[]).join("/");
                match joined.as_str() {
                    "folder" => folder = Some(text),
                    "filename" => filename = Some(text),
                    "path" => doc_path = Some(text),
                    "size/width" => width = Some(text),
                    "size/height" => height = Some(text),
                    "size/depth" => depth = Some(text),
                    "object/name" => set_obj(&mut objects, |o| o.name = Some(text)),
                    "object/pose" => set_obj(&mut objects, |o| o.pose = Some(text)),
                    "object/truncated" => set_obj(&mut objects, |o| o.truncated = Some(text)),
                    "object/difficult" => set_obj(&mut objects, |o| o.difficult = Some(text)),
                    "object/bndbox/xmin" => set_obj(&mut objects, |o| o.xmin = Some(text)),
                    "object/bndbox/ymin" => set_obj(&mut objects, |o| o.ymin = Some(text)),
                    "object/bndbox/xmax" => set_obj(&mut objects, |o| o.xmax = Some(text)),
                    "object/bndbox/ymax" => set_obj(&mut objects, |o| o.ymax = Some(text)),
                    _ => {} // unknown element: ignored
                }
            }
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(e) => return Err(VocError::Xml(e.to_string())),
        }
        buf.clear();
    }

    let parse_int = |value: Option<String>, path: &str| -> Result<i64, VocError> {
        let v = value.ok_or_else(|| VocError::MissingElement(path.to_string()))?;
        v.parse::<i64>().map_err(|_| VocError::BadInteger {
            path: path.to_string(),
            value: v,
        })
    };
    let parse_flag = |value: Option<String>, path: &str| -> Result<bool, VocError> {
        match value {
            None => Ok(false),
            Some(v) => {
                let n = v.parse::<i64>().map_err(|_| VocError::BadInteger {
                    path: path.to_string(),
                    value: v,
                })?;
                Ok(n != 0)
            }
        }
    };

    let mut parsed = Vec::with_capacity(objects.len());
    for (i, raw) in objects.into_iter().enumerate() {
        let leaf = |l: &str| format!("object[{i}]/{l}");
        parsed.push(VocObject {
            name: raw
                .name
                .ok_or_else(|| VocError::MissingElement(leaf("name")))?,
            pose: raw.pose.unwrap_or_else(|| "Unspecified".into()),
            truncated: parse_flag(raw.truncated, &leaf("truncated"))?,
            difficult: parse_flag(raw.difficult, &leaf("difficult"))?,
            xmin: parse_int(raw.xmin, &leaf("bndbox/xmin"))?,
            ymin: parse_int(raw.ymin, &leaf("bndbox/ymin"))?,
            xmax: parse_int(raw.xmax, &leaf("bndbox/xmax"))?,
            ymax: parse_int(raw.ymax, &leaf("bndbox/ymax"))?,
        });
    }

    let doc = VocDocument {
        folder: folder.unwrap_or_default(),
        filename: filename.ok_or_else(|| VocError::MissingElement("filename".into()))?,
        path: doc_path.unwrap_or_default(),
        width: parse_int(width, "size/width")?,
        height: parse_int(height, "size/height")?,
        depth: parse_int(depth, "size/depth")?,
        objects: parsed,
    };
    doc.validate()?;
    Ok(doc)
}

fn set_obj(objects: &mut [RawObject], f: impl FnOnce(&mut RawObject)) {
    if let Some(last) = objects.last_mut() {
        f(last);
    }
}
