//! YOLO-style label directories: one `<id>.txt` per image with
//! `class cx cy w h` lines in normalized coordinates.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Slack allowed on raw coordinates before clamping.
pub const CLAMP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub class_id: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    fn edges(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }

    /// Clips the box edges to the unit square. `None` if nothing is left.
    pub fn clamped(&self) -> Option<BBox> {
        let (x0, y0, x1, y1) = self.edges();
        let (x0, y0) = (x0.clamp(0.0, 1.0), y0.clamp(0.0, 1.0));
        let (x1, y1) = (x1.clamp(0.0, 1.0), y1.clamp(0.0, 1.0));
        let (w, h) = (x1 - x0, y1 - y0);
        if w <= 0.0 || h <= 0.0 {
            return None;
        }
        // keep the original numbers when already inside, so clamping is idempotent bit-for-bit
        if (x0, y0, x1, y1) == self.edges() {
            return Some(*self);
        }
        Some(BBox {
            class_id: self.class_id,
            cx: (x0 + x1) / 2.0,
            cy: (y0 + y1) / 2.0,
            w,
            h,
        })
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let (ax0, ay0, ax1, ay1) = self.edges();
        let (bx0, by0, bx1, by1) = other.edges();
        let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
        let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageLabels {
    pub image_id: String,
    pub boxes: Vec<BBox>,
}

impl ImageLabels {
    pub fn new(image_id: impl Into<String>, boxes: Vec<BBox>) -> Self {
        ImageLabels {
            image_id: image_id.into(),
            boxes,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationSet {
    pub images: Vec<ImageLabels>,
}

impl AnnotationSet {
    pub fn new(images: Vec<ImageLabels>) -> Self {
        AnnotationSet { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let images = indices
            .iter()
            .map(|&i| {
                self.images.get(i).cloned().ok_or_else(|| {
                    Error::invalid(format!("label index {i} out of range ({} images)", self.images.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AnnotationSet { images })
    }

    pub fn prefix(&self, n: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..n).collect();
        self.select(&idx)
    }
}

fn parse_coord(field: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = field.parse().map_err(|_| format!("non-numeric {name} {field:?}"))?;
    if !v.is_finite() {
        return Err(format!("non-finite {name}"));
    }
    if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&v) {
        return Err(format!("{name}={v} outside [0,1]"));
    }
    Ok(v)
}

/// Parses the contents of one label file. Blank lines are skipped.
pub fn parse_label_text(text: &str, path: &Path) -> Result<Vec<BBox>> {
    let mut boxes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedLabel {
            path: path.to_path_buf(),
            line: lineno + 1,
            reason,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(malformed(format!(
                "malformed label line: expected 5 fields, found {}",
                fields.len()
            )));
        }
        let class_id: u32 = fields[0]
            .parse()
            .map_err(|_| malformed(format!("malformed label line: class id {:?}", fields[0])))?;
        let mut vals = [0.0; 4];
        for (slot, (field, name)) in vals.iter_mut().zip(fields[1..].iter().zip(["cx", "cy", "w", "h"])) {
            *slot = parse_coord(field, name).map_err(malformed)?;
        }
        let raw = BBox {
            class_id,
            cx: vals[0],
            cy: vals[1],
            w: vals[2],
            h: vals[3],
        };
        if raw.w <= 0.0 || raw.h <= 0.0 {
            return Err(malformed("non-positive box size".into()));
        }
        let clamped = raw
            .clamped()
            .ok_or_else(|| malformed("box vanishes after clamping".into()))?;
        boxes.push(clamped);
    }
    Ok(boxes)
}

const IMAGE_EXTENSIONS: [&str; 6] = ["jpg", "jpeg", "png", "bmp", "webp", "tif"];

/// `<dir>/<id>.txt`, with a trailing image extension on the id dropped.
pub fn label_path(dir: &Path, image_id: &str) -> PathBuf {
    let stem = match image_id.rsplit_once('.') {
        Some((stem, ext)) if IMAGE_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()) => stem,
        _ => image_id,
    };
    dir.join(format!("{stem}.txt"))
}

/// Loads every id listed in `index` (one per line). A missing label file
/// means the image has no boxes.
pub fn load_labels(dir: impl AsRef<Path>, index: impl AsRef<Path>) -> Result<AnnotationSet> {
    let dir = dir.as_ref();
    let index = index.as_ref();
    let text = fs::read_to_string(index).map_err(|e| Error::io(index, e))?;
    let mut images = Vec::new();
    for id in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let path = label_path(dir, id);
        let boxes = match fs::read_to_string(&path) {
            Ok(body) => parse_label_text(&body, &path)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(Error::io(&path, e)),
        };
        images.push(ImageLabels::new(id, boxes));
    }
    Ok(AnnotationSet { images })
}

/// Writes one label file per image plus the index. Images without boxes get
/// no label file.
pub fn write_labels(dir: impl AsRef<Path>, index: impl AsRef<Path>, set: &AnnotationSet) -> Result<()> {
    let dir = dir.as_ref();
    let index = index.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut idx = String::new();
    for img in &set.images {
        idx.push_str(&img.image_id);
        idx.push('\n');
        if img.boxes.is_empty() {
            continue;
        }
        let mut body = String::new();
        for b in &img.boxes {
            body.push_str(&format!("{} {} {} {} {}\n", b.class_id, b.cx, b.cy, b.w, b.h));
        }
        let path = label_path(dir, &img.image_id);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    fs::write(index, idx).map_err(|e| Error::io(index, e))
}
