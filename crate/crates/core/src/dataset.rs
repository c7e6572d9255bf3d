//! Image datasets and their on-disk formats.
//!
//! Every loader produces an [`ImageDataset`] of 8-bit images stored
//! channel-interleaved and row-major. Records are never reordered: image `i`
//! always corresponds to record `i` of the input.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MNIST_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const MNIST_LABEL_MAGIC: u32 = 0x0000_0801;

const CIFAR_SIDE: usize = 32;
const CIFAR_PLANE: usize = CIFAR_SIDE * CIFAR_SIDE;
const CIFAR_PIXELS: usize = 3 * CIFAR_PLANE;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!(
                "{channels} channels, expected 1 or 3"
            )));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::Length(format!(
                "{} pixels for a {height}x{width}x{channels} image",
                pixels.len()
            )));
        }
        Ok(Image {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    /// Intensity at row `r`, column `c`, channel `ch`.
    pub fn at(&self, r: usize, c: usize, ch: usize) -> u8 {
        self.pixels[(r * self.width + c) * self.channels + ch]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDataset {
    pub name: String,
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub split: Split,
}

impl ImageDataset {
    /// Builds a dataset, checking the label range and shape uniformity.
    pub fn new(
        name: impl Into<String>,
        images: Vec<Image>,
        labels: Vec<usize>,
        num_classes: usize,
        split: Split,
    ) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Consistency(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Consistency(format!(
                "label {bad} outside [0, {num_classes})"
            )));
        }
        if let Some(first) = images.first() {
            let shape = first.shape();
            if let Some((i, img)) = images
                .iter()
                .enumerate()
                .find(|(_, im)| im.shape() != shape)
            {
                return Err(Error::Shape(format!(
                    "image {i} is {:?}, expected {:?}",
                    img.shape(),
                    shape
                )));
            }
        }
        Ok(ImageDataset {
            name: name.into(),
            images,
            labels,
            num_classes,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `(height, width, channels)` shared by every image, if any.
    pub fn shape(&self) -> Option<(usize, usize, usize)> {
        self.images.first().map(Image::shape)
    }

    /// The first `n` records (or all of them if fewer).
    pub fn take(&self, n: usize) -> ImageDataset {
        let n = n.min(self.len());
        ImageDataset {
            name: self.name.clone(),
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
            num_classes: self.num_classes,
            split: self.split,
        }
    }

    /// Records at the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> ImageDataset {
        ImageDataset {
            name: self.name.clone(),
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            split: self.split,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Length(format!("{what}: header truncated")))
}

/// Loads an MNIST-style IDX image/label file pair.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<ImageDataset> {
    let img_bytes = read(images_path)?;
    let lbl_bytes = read(labels_path)?;
    let name = images_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mnist".to_owned());
    let split = if name.starts_with("t10k") || name.contains("test") {
        Split::Test
    } else {
        Split::Train
    };
    parse_mnist_idx(&img_bytes, &lbl_bytes, &name, split)
}

/// Parses IDX image and label buffers already in memory.
pub fn parse_mnist_idx(
    img_bytes: &[u8],
    lbl_bytes: &[u8],
    name: &str,
    split: Split,
) -> Result<ImageDataset> {
    let magic = be_u32(img_bytes, 0, "image file")?;
    if magic != MNIST_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "image file magic {magic:#010x}, expected {MNIST_IMAGE_MAGIC:#010x}"
        )));
    }
    let magic = be_u32(lbl_bytes, 0, "label file")?;
    if magic != MNIST_LABEL_MAGIC {
        return Err(Error::Format(format!(
            "label file magic {magic:#010x}, expected {MNIST_LABEL_MAGIC:#010x}"
        )));
    }
    let count = be_u32(img_bytes, 4, "image file")? as usize;
    let rows = be_u32(img_bytes, 8, "image file")? as usize;
    let cols = be_u32(img_bytes, 12, "image file")? as usize;
    let label_count = be_u32(lbl_bytes, 4, "label file")? as usize;
    if count != label_count {
        return Err(Error::Consistency(format!(
            "image file holds {count} images, label file {label_count} labels"
        )));
    }
    let per_image = rows * cols;
    let payload = &img_bytes[16..];
    if payload.len() < count * per_image {
        return Err(Error::Length(format!(
            "image payload is {} bytes, header promises {}",
            payload.len(),
            count * per_image
        )));
    }
    let label_payload = &lbl_bytes[8..];
    if label_payload.len() < count {
        return Err(Error::Length(format!(
            "label payload is {} bytes, header promises {count}",
            label_payload.len()
        )));
    }
    let images = payload
        .chunks_exact(per_image)
        .take(count)
        .map(|px| Image::new(rows, cols, 1, px.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = label_payload[..count].iter().map(|&l| l as usize).collect();
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1).max(10);
    ImageDataset::new(name, images, labels, num_classes, split)
}

/// Writes a grayscale dataset as an IDX image/label pair.
pub fn write_mnist_idx(ds: &ImageDataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    let (img, lbl) = encode_mnist_idx(ds)?;
    fs::write(images_path, img).map_err(|e| Error::io(images_path, e))?;
    fs::write(labels_path, lbl).map_err(|e| Error::io(labels_path, e))
}

pub fn encode_mnist_idx(ds: &ImageDataset) -> Result<(Vec<u8>, Vec<u8>)> {
    let (h, w, c) = ds.shape().unwrap_or((0, 0, 1));
    if c != 1 {
        return Err(Error::Shape("IDX images must be single-channel".into()));
    }
    if ds.labels.iter().any(|&l| l > u8::MAX as usize) {
        return Err(Error::Consistency("IDX labels must fit in one byte".into()));
    }
    let mut img = Vec::with_capacity(16 + ds.len() * h * w);
    for v in [MNIST_IMAGE_MAGIC, ds.len() as u32, h as u32, w as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    for im in &ds.images {
        img.extend_from_slice(&im.pixels);
    }
    let mut lbl = Vec::with_capacity(8 + ds.len());
    lbl.extend_from_slice(&MNIST_LABEL_MAGIC.to_be_bytes());
    lbl.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    lbl.extend(ds.labels.iter().map(|&l| l as u8));
    Ok((img, lbl))
}

/// Label layout of a CIFAR binary record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CifarLabels {
    /// CIFAR-10: one label byte.
    Single,
    /// CIFAR-100: coarse byte then fine byte; the fine label is kept.
    CoarseFine,
}

impl CifarLabels {
    pub fn width(self) -> usize {
        match self {
            CifarLabels::Single => 1,
            CifarLabels::CoarseFine => 2,
        }
    }

    pub fn from_width(width: usize) -> Result<Self> {
        match width {
            1 => Ok(CifarLabels::Single),
            2 => Ok(CifarLabels::CoarseFine),
            w => Err(Error::Config(format!("label width {w}, expected 1 or 2"))),
        }
    }
}

/// Loads and concatenates CIFAR binary batch files in the order given.
pub fn load_cifar_binary(paths: &[PathBuf], labels: CifarLabels) -> Result<ImageDataset> {
    let mut images = Vec::new();
    let mut label_vec = Vec::new();
    for path in paths {
        let bytes = read(path)?;
        let (mut im, mut lb) = parse_cifar_records(&bytes, labels)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        images.append(&mut im);
        label_vec.append(&mut lb);
    }
    let (name, num_classes) = match labels {
        CifarLabels::Single => ("cifar-10", 10),
        CifarLabels::CoarseFine => ("cifar-100", 100),
    };
    let split = if paths.iter().all(|p| {
        p.file_name()
            .is_some_and(|f| f.to_string_lossy().contains("test"))
    }) && !paths.is_empty()
    {
        Split::Test
    } else {
        Split::Train
    };
    ImageDataset::new(name, images, label_vec, num_classes, split)
}

/// Decodes a buffer of CIFAR records, converting planar RGB to interleaved.
pub fn parse_cifar_records(bytes: &[u8], labels: CifarLabels) -> Result<(Vec<Image>, Vec<usize>)> {
    let lw = labels.width();
    let record = lw + CIFAR_PIXELS;
    if !bytes.len().is_multiple_of(record) {
        return Err(Error::Format(format!(
            "{} bytes is not a multiple of the {record}-byte record size",
            bytes.len()
        )));
    }
    let mut images = Vec::with_capacity(bytes.len() / record);
    let mut out_labels = Vec::with_capacity(bytes.len() / record);
    for rec in bytes.chunks_exact(record) {
        out_labels.push(rec[lw - 1] as usize);
        let planes = &rec[lw..];
        let mut px = vec![0u8; CIFAR_PIXELS];
        for (i, chunk) in px.chunks_exact_mut(3).enumerate() {
            for (ch, v) in chunk.iter_mut().enumerate() {
                *v = planes[ch * CIFAR_PLANE + i];
            }
        }
        images.push(Image::new(CIFAR_SIDE, CIFAR_SIDE, 3, px)?);
    }
    Ok((images, out_labels))
}

/// Encodes 32x32 RGB images as CIFAR records (coarse label written as 0).
pub fn encode_cifar_records(ds: &ImageDataset, labels: CifarLabels) -> Result<Vec<u8>> {
    if ds.shape().is_some_and(|s| s != (CIFAR_SIDE, CIFAR_SIDE, 3)) {
        return Err(Error::Shape("CIFAR records hold 32x32x3 images".into()));
    }
    let mut out = Vec::with_capacity(ds.len() * (labels.width() + CIFAR_PIXELS));
    for (img, &label) in ds.images.iter().zip(&ds.labels) {
        if labels == CifarLabels::CoarseFine {
            out.push(0);
        }
        out.push(label as u8);
        for ch in 0..3 {
            out.extend(img.pixels.iter().skip(ch).step_by(3));
        }
    }
    Ok(out)
}

struct Pnm {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

fn parse_pnm(bytes: &[u8]) -> Result<Pnm> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => {
            return Err(Error::Format(
                "not a binary PGM (P5) or PPM (P6) file".into(),
            ))
        }
    };
    // Header: magic, width, height, maxval separated by whitespace and comments.
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("malformed PNM header".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("malformed PNM header".into()));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedDepth(maxval));
    }
    let (width, height) = (width as usize, height as usize);
    let need = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(Error::Length(format!(
            "PNM payload is {} bytes, expected {need}",
            payload.len()
        )));
    }
    Ok(Pnm {
        width,
        height,
        channels,
        pixels: payload[..need].to_vec(),
    })
}

pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Loads a directory of class subdirectories holding P5/P6 files.
///
/// Class indices follow the lexicographic order of the subdirectory names;
/// files inside a class are read in lexicographic order too.
pub fn load_pnm_dir(dir: &Path) -> Result<ImageDataset> {
    let mut classes: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    classes.sort();
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (label, class_dir) in classes.iter().enumerate() {
        let mut files: Vec<PathBuf> = fs::read_dir(class_dir)
            .map_err(|e| Error::io(class_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .is_some_and(|x| matches!(x.to_str(), Some("pgm" | "ppm" | "pnm")))
            })
            .collect();
        files.sort();
        for file in files {
            let pnm = parse_pnm(&read(&file)?).map_err(|e| match e {
                Error::Format(m) => Error::Format(format!("{}: {m}", file.display())),
                other => other,
            })?;
            images.push(Image::new(pnm.height, pnm.width, pnm.channels, pnm.pixels)?);
            labels.push(label);
        }
    }
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pnm".to_owned());
    ImageDataset::new(name, images, labels, classes.len(), Split::Train)
}

/// Writes `ds` as `<dir>/<class-name>/<index>.pgm|ppm`.
pub fn write_pnm_dir(ds: &ImageDataset, dir: &Path, class_names: &[String]) -> Result<()> {
    if class_names.len() != ds.num_classes {
        return Err(Error::Consistency(format!(
            "{} class names for {} classes",
            class_names.len(),
            ds.num_classes
        )));
    }
    for (i, (img, &label)) in ds.images.iter().zip(&ds.labels).enumerate() {
        let class_dir = dir.join(&class_names[label]);
        fs::create_dir_all(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
        let ext = if img.channels == 1 { "pgm" } else { "ppm" };
        let path = class_dir.join(format!("{i:06}.{ext}"));
        fs::write(&path, encode_pnm(img)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Public datasets found under a data root in their distribution layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnownDataset {
    Mnist,
    Cifar10,
    Cifar100,
}

impl KnownDataset {
    pub fn name(self) -> &'static str {
        match self {
            KnownDataset::Mnist => "mnist",
            KnownDataset::Cifar10 => "cifar-10",
            KnownDataset::Cifar100 => "cifar-100",
        }
    }

    /// Candidate file sets, most specific directory first.
    fn candidates(self, root: &Path, split: Split) -> Vec<Vec<PathBuf>> {
        match self {
            KnownDataset::Mnist => {
                let stem = match split {
                    Split::Train => "train",
                    Split::Test => "t10k",
                };
                [
                    root.join("mnist"),
                    root.join("MNIST/raw"),
                    root.to_path_buf(),
                ]
                .into_iter()
                .map(|d| {
                    vec![
                        d.join(format!("{stem}-images-idx3-ubyte")),
                        d.join(format!("{stem}-labels-idx1-ubyte")),
                    ]
                })
                .collect()
            }
            KnownDataset::Cifar10 => {
                let files: Vec<String> = match split {
                    Split::Train => (1..=5).map(|i| format!("data_batch_{i}.bin")).collect(),
                    Split::Test => vec!["test_batch.bin".into()],
                };
                [
                    root.join("cifar-10-batches-bin"),
                    root.join("cifar-10"),
                    root.to_path_buf(),
                ]
                .into_iter()
                .map(|d| files.iter().map(|f| d.join(f)).collect())
                .collect()
            }
            KnownDataset::Cifar100 => {
                let file = match split {
                    Split::Train => "train.bin",
                    Split::Test => "test.bin",
                };
                [root.join("cifar-100-binary"), root.join("cifar-100")]
                    .into_iter()
                    .map(|d| vec![d.join(file)])
                    .collect()
            }
        }
    }

    /// The first candidate file set that exists in full.
    pub fn locate(self, root: &Path, split: Split) -> Option<Vec<PathBuf>> {
        self.candidates(root, split)
            .into_iter()
            .find(|files| files.iter().all(|f| f.is_file()))
    }

    pub fn load(self, root: &Path, split: Split) -> Result<ImageDataset> {
        let files = self.locate(root, split).ok_or_else(|| {
            Error::io(
                root,
                std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("no {} {split:?} files in a known layout", self.name()),
                ),
            )
        })?;
        let mut ds = match self {
            KnownDataset::Mnist => load_mnist_idx(&files[0], &files[1])?,
            KnownDataset::Cifar10 => load_cifar_binary(&files, CifarLabels::Single)?,
            KnownDataset::Cifar100 => load_cifar_binary(&files, CifarLabels::CoarseFine)?,
        };
        ds.name = format!("{}-{}", self.name(), split_name(split));
        ds.split = split;
        Ok(ds)
    }
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Test => "test",
    }
}

impl std::str::FromStr for KnownDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mnist" => Ok(KnownDataset::Mnist),
            "cifar10" | "cifar-10" => Ok(KnownDataset::Cifar10),
            "cifar100" | "cifar-100" => Ok(KnownDataset::Cifar100),
            other => Err(Error::Usage(format!(
                "unknown dataset {other:?} (mnist | cifar-10 | cifar-100)"
            ))),
        }
    }
}

/// Intensity distribution for one synthetic class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    /// intensity → probability; must sum to 1.
    pub distribution: BTreeMap<u8, f64>,
}

impl ClassSpec {
    pub fn uniform_value(v: u8) -> Self {
        ClassSpec {
            distribution: BTreeMap::from([(v, 1.0)]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub classes: Vec<ClassSpec>,
}

/// Deterministic dataset whose pixels are drawn i.i.d. from per-class tables.
pub fn synth_dataset(spec: &SynthSpec, n_per_class: usize, seed: u64) -> Result<ImageDataset> {
    if spec.classes.is_empty() {
        return Err(Error::Spec("no classes".into()));
    }
    let mut samplers = Vec::with_capacity(spec.classes.len());
    for (k, class) in spec.classes.iter().enumerate() {
        let total: f64 = class.distribution.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Spec(format!(
                "class {k} probabilities sum to {total}"
            )));
        }
        if class
            .distribution
            .values()
            .any(|&p| !(0.0..=1.0).contains(&p))
        {
            return Err(Error::Spec(format!(
                "class {k} has a probability outside [0, 1]"
            )));
        }
        let values: Vec<u8> = class.distribution.keys().copied().collect();
        let weights = WeightedIndex::new(class.distribution.values().copied())
            .map_err(|e| Error::Spec(format!("class {k}: {e}")))?;
        samplers.push((values, weights));
    }
    let size = spec.height * spec.width * spec.channels;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(n_per_class * spec.classes.len());
    let mut labels = Vec::with_capacity(images.capacity());
    for (label, (values, weights)) in samplers.iter().enumerate() {
        for _ in 0..n_per_class {
            let px = (0..size)
                .map(|_| values[weights.sample(&mut rng)])
                .collect();
            images.push(Image::new(spec.height, spec.width, spec.channels, px)?);
            labels.push(label);
        }
    }
    ImageDataset::new(
        "synthetic",
        images,
        labels,
        spec.classes.len(),
        Split::Train,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_pair(images: &[[u8; 4]], labels: &[u8], label_count: u32) -> (Vec<u8>, Vec<u8>) {
        let mut img = Vec::new();
        for v in [MNIST_IMAGE_MAGIC, images.len() as u32, 2, 2] {
            img.extend_from_slice(&v.to_be_bytes());
        }
        for im in images {
            img.extend_from_slice(im);
        }
        let mut lbl = Vec::new();
        lbl.extend_from_slice(&MNIST_LABEL_MAGIC.to_be_bytes());
        lbl.extend_from_slice(&label_count.to_be_bytes());
        lbl.extend_from_slice(labels);
        (img, lbl)
    }

    #[test]
    fn idx_two_images_bit_exact() {
        let (img, lbl) = idx_pair(&[[0, 1, 2, 3], [255, 254, 9, 8]], &[3, 7], 2);
        let ds = parse_mnist_idx(&img, &lbl, "t", Split::Train).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.images[0].pixels, vec![0, 1, 2, 3]);
        assert_eq!(ds.images[1].pixels, vec![255, 254, 9, 8]);
        assert_eq!(ds.labels, vec![3, 7]);
        assert_eq!(ds.shape(), Some((2, 2, 1)));
        let (img2, lbl2) = encode_mnist_idx(&ds).unwrap();
        assert_eq!((img2, lbl2), (img, lbl));
    }

    #[test]
    fn idx_count_mismatch() {
        let (img, mut lbl) = idx_pair(&[[0; 4], [0; 4]], &[1, 2], 3);
        lbl.push(0);
        let err = parse_mnist_idx(&img, &lbl, "t", Split::Train).unwrap_err();
        assert!(matches!(err, Error::Consistency(_)), "{err}");
    }

    #[test]
    fn idx_bad_magic_and_truncation() {
        let (mut img, lbl) = idx_pair(&[[0; 4]], &[1], 1);
        img[3] = 0x04;
        assert!(matches!(
            parse_mnist_idx(&img, &lbl, "t", Split::Train),
            Err(Error::Format(_))
        ));
        let (mut img, lbl) = idx_pair(&[[0; 4]], &[1], 1);
        img.pop();
        assert!(matches!(
            parse_mnist_idx(&img, &lbl, "t", Split::Train),
            Err(Error::Length(_))
        ));
    }

    #[test]
    fn cifar_uniform_record() {
        let mut rec = vec![4u8];
        rec.extend(std::iter::repeat_n(7, CIFAR_PIXELS));
        let (imgs, labels) = parse_cifar_records(&rec, CifarLabels::Single).unwrap();
        assert_eq!(labels, vec![4]);
        assert_eq!(imgs.len(), 1);
        assert!(imgs[0].pixels.iter().all(|&p| p == 7));
        assert_eq!(imgs[0].shape(), (32, 32, 3));
    }

    #[test]
    fn cifar_bad_size() {
        let bytes = vec![0u8; 3073 * 2 + 1];
        assert!(matches!(
            parse_cifar_records(&bytes, CifarLabels::Single),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn cifar_planar_to_interleaved() {
        for labels in [CifarLabels::Single, CifarLabels::CoarseFine] {
            let lw = labels.width();
            let rec: Vec<u8> = (0..lw + CIFAR_PIXELS)
                .map(|i| (i * 31 % 251) as u8)
                .collect();
            let (imgs, lbl) = parse_cifar_records(&rec, labels).unwrap();
            assert_eq!(lbl[0], rec[lw - 1] as usize);
            for r in 0..32 {
                for c in 0..32 {
                    for ch in 0..3 {
                        assert_eq!(imgs[0].at(r, c, ch), rec[lw + ch * 1024 + r * 32 + c]);
                    }
                }
            }
        }
    }

    #[test]
    fn cifar100_keeps_fine_label() {
        let mut rec = vec![3u8, 87];
        rec.extend(std::iter::repeat_n(0, CIFAR_PIXELS));
        let (_, labels) = parse_cifar_records(&rec, CifarLabels::CoarseFine).unwrap();
        assert_eq!(labels, vec![87]);
    }

    #[test]
    fn pnm_maxval_rejected() {
        let mut bytes = b"P6\n2 2\n65535\n".to_vec();
        bytes.extend(std::iter::repeat_n(0, 24));
        assert!(matches!(
            parse_pnm(&bytes),
            Err(Error::UnsupportedDepth(65535))
        ));
    }

    #[test]
    fn pnm_header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n4 4\n255\n".to_vec();
        bytes.extend(std::iter::repeat_n(0, 16));
        let pnm = parse_pnm(&bytes).unwrap();
        assert_eq!((pnm.width, pnm.height, pnm.channels), (4, 4, 1));
        assert_eq!(pnm.pixels, vec![0; 16]);
    }

    #[test]
    fn synth_uniform_class() {
        let spec = SynthSpec {
            height: 4,
            width: 4,
            channels: 1,
            classes: vec![ClassSpec::uniform_value(128)],
        };
        let ds = synth_dataset(&spec, 10, 0).unwrap();
        assert_eq!(ds.len(), 10);
        assert!(ds
            .images
            .iter()
            .all(|im| im.pixels.iter().all(|&p| p == 128)));
    }

    #[test]
    fn synth_rejects_bad_probabilities() {
        let spec = SynthSpec {
            height: 2,
            width: 2,
            channels: 1,
            classes: vec![ClassSpec {
                distribution: BTreeMap::from([(0, 0.5), (1, 0.4)]),
            }],
        };
        assert!(matches!(synth_dataset(&spec, 1, 0), Err(Error::Spec(_))));
    }

    #[test]
    fn synth_is_deterministic() {
        let spec = SynthSpec {
            height: 8,
            width: 8,
            channels: 3,
            classes: vec![
                ClassSpec {
                    distribution: BTreeMap::from([(0, 0.5), (255, 0.5)]),
                },
                ClassSpec {
                    distribution: BTreeMap::from([(10, 0.25), (20, 0.25), (30, 0.5)]),
                },
            ],
        };
        assert_eq!(
            synth_dataset(&spec, 5, 42).unwrap(),
            synth_dataset(&spec, 5, 42).unwrap()
        );
        assert_ne!(
            synth_dataset(&spec, 5, 42).unwrap(),
            synth_dataset(&spec, 5, 43).unwrap()
        );
    }

    #[test]
    fn dataset_rejects_mixed_shapes() {
        let a = Image::new(2, 2, 1, vec![0; 4]).unwrap();
        let b = Image::new(3, 3, 1, vec![0; 9]).unwrap();
        assert!(matches!(
            ImageDataset::new("x", vec![a, b], vec![0, 0], 1, Split::Train),
            Err(Error::Shape(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_dataset(channels: usize, classes: usize) -> impl Strategy<Value = ImageDataset> {
            (1usize..6, 1usize..6, 1usize..8).prop_flat_map(move |(h, w, n)| {
                (
                    proptest::collection::vec(
                        proptest::collection::vec(any::<u8>(), h * w * channels),
                        n,
                    ),
                    proptest::collection::vec(0..classes, n),
                )
                    .prop_map(move |(px, labels)| {
                        let images = px
                            .into_iter()
                            .map(|p| Image::new(h, w, channels, p).unwrap())
                            .collect();
                        ImageDataset::new("p", images, labels, classes, Split::Train).unwrap()
                    })
            })
        }

        proptest! {
            #[test]
            fn mnist_round_trip(ds in arb_dataset(1, 10)) {
                let (img, lbl) = encode_mnist_idx(&ds).unwrap();
                let back = parse_mnist_idx(&img, &lbl, "p", Split::Train).unwrap();
                prop_assert_eq!(back.images, ds.images);
                prop_assert_eq!(back.labels, ds.labels);
            }

            #[test]
            fn cifar_records_round_trip(
                px in proptest::collection::vec(proptest::collection::vec(any::<u8>(), CIFAR_PIXELS), 1..4),
                fine in proptest::collection::vec(0usize..100, 3),
            ) {
                let n = px.len();
                let images: Vec<Image> = px.into_iter().map(|p| Image::new(32, 32, 3, p).unwrap()).collect();
                let ds = ImageDataset::new("p", images, fine[..n].to_vec(), 100, Split::Train).unwrap();
                let bytes = encode_cifar_records(&ds, CifarLabels::CoarseFine).unwrap();
                let (images, labels) = parse_cifar_records(&bytes, CifarLabels::CoarseFine).unwrap();
                prop_assert_eq!(images, ds.images);
                prop_assert_eq!(labels, ds.labels);
            }

            #[test]
            fn truncated_idx_is_rejected(ds in arb_dataset(1, 10), cut in 1usize..16) {
                let (img, lbl) = encode_mnist_idx(&ds).unwrap();
                let cut = cut.min(img.len() - 1);
                prop_assert!(parse_mnist_idx(&img[..img.len() - cut], &lbl, "p", Split::Train).is_err());
            }

            #[test]
            fn out_of_range_label_is_rejected(n in 1usize..10, classes in 1usize..10) {
                let images = vec![Image::new(1, 1, 1, vec![0]).unwrap(); n];
                let mut labels = vec![0; n];
                labels[n - 1] = classes;
                prop_assert!(matches!(
                    ImageDataset::new("p", images, labels, classes, Split::Train),
                    Err(Error::Consistency(_))
                ));
            }
        }
    }
}
