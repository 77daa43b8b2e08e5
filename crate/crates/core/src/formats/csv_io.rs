//! Flat CSV annotation export, one row per labeled object.
//!
//! Column order is `filename,width,height,class,xmin,ymin,xmax,ymax`. Rows
//! are sorted by filename, then xmin, then ymin (remaining fields break any
//! leftover ties) so the same input always serializes byte-identically.
//! Images with no objects emit no rows; the difficult flag is not part of
//! this format's field set.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{AnnotatedImage, BoundingBox, LabeledObject, ModelError, Split};

pub const CSV_HEADER: [&str; 8] = [
    "filename", "width", "height", "class", "xmin", "ymin", "xmax", "ymax",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("unexpected header {got:?}, want {want:?}")]
    BadHeader { got: Vec<String>, want: Vec<String> },
    #[error("csv: {0}")]
    Inner(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Object rows grouped back under one filename.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvImage {
    pub filename: String,
    pub width: i64,
    pub height: i64,
    pub objects: Vec<LabeledObject>,
}

impl CsvImage {
    /// Converts to an annotated image with a path reference; the id is the
    /// filename stem.
    pub fn to_annotated(&self, split: Split) -> AnnotatedImage {
        let id = self
            .filename
            .strip_suffix(".png")
            .unwrap_or(&self.filename)
            .to_string();
        AnnotatedImage {
            id,
            width: self.width as usize,
            height: self.height as usize,
            image: crate::model::ImageRef::Path(self.filename.clone()),
            objects: self.objects.clone(),
            split,
        }
    }
}

/// Serializes annotations to CSV bytes, one row per object, coordinates
/// rounded half-up to integers.
pub fn to_csv(images: &[AnnotatedImage]) -> Result<Vec<u8>, CsvError> {
    #[derive(PartialEq, Eq, PartialOrd, Ord)]
    struct Row {
        filename: String,
        xmin: i64,
        ymin: i64,
        ymax: i64,
        xmax: i64,
        class: String,
        width: i64,
        height: i64,
    }
    let mut rows = Vec::new();
    for img in images {
        let filename = format!("{}.png", img.id);
        for obj in &img.objects {
            rows.push(Row {
                filename: filename.clone(),
                xmin: obj.box_.xmin().round() as i64,
                ymin: obj.box_.ymin().round() as i64,
                ymax: obj.box_.ymax().round() as i64,
                xmax: obj.box_.xmax().round() as i64,
                class: obj.class_name.clone(),
                width: img.width as i64,
                height: img.height as i64,
            });
        }
    }
    rows.sort();

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| CsvError::Inner(e.to_string()))?;
    for r in rows {
        writer
            .write_record([
                r.filename.as_str(),
                &r.width.to_string(),
                &r.height.to_string(),
                &r.class,
                &r.xmin.to_string(),
                &r.ymin.to_string(),
                &r.xmax.to_string(),
                &r.ymax.to_string(),
            ])
            .map_err(|e| CsvError::Inner(e.to_string()))?;
    }
    writer
        .into_inner()
        .map_err(|e| CsvError::Inner(e.to_string()))
}

/// Parses CSV bytes and groups rows by filename (ascending).
pub fn from_csv(bytes: &[u8]) -> Result<Vec<CsvImage>, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);

    let headers = reader
        .headers()
        .map_err(|e| CsvError::Inner(e.to_string()))?
        .clone();
    let got: Vec<String> = headers.iter().map(str::to_string).collect();
    if got != CSV_HEADER {
        return Err(CsvError::BadHeader {
            got,
            want: CSV_HEADER.iter().map(|s| s.to_string()).collect(),
        });
    }

    let mut grouped: BTreeMap<String, CsvImage> = BTreeMap::new();
    for result in reader.records() {
        let record = result.map_err(|e| CsvError::Inner(e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != CSV_HEADER.len() {
            return Err(CsvError::MalformedRow {
                line,
                reason: format!("expected {} columns, got {}", CSV_HEADER.len(), record.len()),
            });
        }
        let int = |idx: usize, name: &str| -> Result<i64, CsvError> {
            record[idx]
                .parse::<i64>()
                .map_err(|_| CsvError::MalformedRow {
                    line,
                    reason: format!("unparsable {name} {:?}", &record[idx]),
                })
        };
        let filename = record[0].to_string();
        let width = int(1, "width")?;
        let height = int(2, "height")?;
        let class = record[3].to_string();
        let xmin = int(4, "xmin")?;
        let ymin = int(5, "ymin")?;
        let xmax = int(6, "xmax")?;
        let ymax = int(7, "ymax")?;

        let b = BoundingBox::new(xmin as f64, ymin as f64, xmax as f64, ymax as f64).map_err(
            |e| CsvError::MalformedRow {
                line,
                reason: e.to_string(),
            },
        )?;
        let obj = LabeledObject::new(class, b, false).map_err(|e| CsvError::MalformedRow {
            line,
            reason: e.to_string(),
        })?;

        let entry = grouped.entry(filename.clone()).or_insert_with(|| CsvImage {
            filename,
            width,
            height,
            objects: Vec::new(),
        });
        if entry.width != width || entry.height != height {
            return Err(CsvError::MalformedRow {
                line,
                reason: format!(
                    "dimensions {width}x{height} disagree with earlier rows ({}x{})",
                    entry.width, entry.height
                ),
            });
        }
        entry.objects.push(obj);
    }
    Ok(grouped.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GrayImage, ImageRef};

    fn image_with_boxes(id: &str, boxes: &[(f64, f64, f64, f64)]) -> AnnotatedImage {
        AnnotatedImage {
            id: id.into(),
            width: 100,
            height: 100,
            image: ImageRef::Loaded(GrayImage::filled(100, 100, 0).unwrap()),
            objects: boxes
                .iter()
                .map(|&(a, b, c, d)| {
                    LabeledObject::new("bullet", BoundingBox::new(a, b, c, d).unwrap(), false)
                        .unwrap()
                })
                .collect(),
            split: Split::Train,
        }
    }

    #[test]
    fn one_image_two_bullets_is_header_plus_two_rows() {
        let img = image_with_boxes("img_0", &[(1.0, 2.0, 3.0, 4.0), (10.0, 2.0, 30.0, 4.0)]);
        let bytes = to_csv(&[img]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "filename,width,height,class,xmin,ymin,xmax,ymax");
        assert_eq!(lines[1], "img_0.png,100,100,bullet,1,2,3,4");
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let bytes = to_csv(&[]).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "filename,width,height,class,xmin,ymin,xmax,ymax\n"
        );
    }

    #[test]
    fn images_without_objects_emit_no_rows() {
        let img = image_with_boxes("empty", &[]);
        let bytes = to_csv(&[img]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 1);
    }

    #[test]
    fn row_order_is_deterministic() {
        let a = image_with_boxes("b_img", &[(5.0, 5.0, 9.0, 9.0), (1.0, 7.0, 3.0, 9.0)]);
        let b = image_with_boxes("a_img", &[(2.0, 2.0, 4.0, 4.0)]);
        let forward = to_csv(&[a.clone(), b.clone()]).unwrap();
        let reversed = to_csv(&[b, a]).unwrap();
        assert_eq!(forward, reversed);
        let text = String::from_utf8(forward).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("a_img.png"));
        assert!(lines[2].starts_with("b_img.png,100,100,bullet,1"));
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let text = "filename,width,height,class,xmin,ymin,xmax,ymax\na.png,100,100,bullet,1,2,3,4\na.png,100,100,bullet,nope,2,3,4\n";
        match from_csv(text.as_bytes()) {
            Err(CsvError::MalformedRow { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("xmin"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count_reports_line_number() {
        let text = "filename,width,height,class,xmin,ymin,xmax,ymax\na.png,100,100,bullet,1,2\n";
        match from_csv(text.as_bytes()) {
            Err(CsvError::MalformedRow { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_object_multiset() {
        let images = vec![
            image_with_boxes("x", &[(1.0, 2.0, 3.0, 4.0), (7.0, 8.0, 9.0, 11.0)]),
            image_with_boxes("y", &[(20.0, 30.0, 40.0, 50.0)]),
        ];
        let parsed = from_csv(&to_csv(&images).unwrap()).unwrap();
        let mut original: Vec<(String, i64, i64, i64, i64)> = images
            .iter()
            .flat_map(|img| {
                img.objects.iter().map(move |o| {
                    (
                        format!("{}.png", img.id),
                        o.box_.xmin() as i64,
                        o.box_.ymin() as i64,
                        o.box_.xmax() as i64,
                        o.box_.ymax() as i64,
                    )
                })
            })
            .collect();
        let mut round: Vec<(String, i64, i64, i64, i64)> = parsed
            .iter()
            .flat_map(|img| {
                img.objects.iter().map(move |o| {
                    (
                        img.filename.clone(),
                        o.box_.xmin() as i64,
                        o.box_.ymin() as i64,
                        o.box_.xmax() as i64,
                        o.box_.ymax() as i64,
                    )
                })
            })
            .collect();
        original.sort();
        round.sort();
        assert_eq!(original, round);
    }
}
