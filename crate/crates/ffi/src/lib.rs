//! C ABI over the `ebcle` core.
//!
//! Every function returns an [`EbcleStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`ebcle_last_error_message`]. Datasets are opaque handles owned by the
//! caller and released with [`ebcle_dataset_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use ebcle::arch::{self, DenseNetOptions, InputShape, ResNeXtOptions};
use ebcle::dataset::{self, CifarLabels, ImageDataset};
use ebcle::entropy::{self, ChannelMode};
use ebcle::planner::{self, Family};
use ebcle::stats::{self, Direction};
use ebcle::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EbcleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Length = 5,
    Consistency = 6,
    Shape = 7,
    Domain = 8,
    Degenerate = 9,
    Config = 10,
    Parse = 11,
    Training = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EbcleFamily {
    Resnet = 0,
    Densenet = 1,
    Resnext = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EbcleChannelMode {
    FlattenAll = 0,
    PerChannelMean = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EbcleDirection {
    /// Alternative: mean of `a` exceeds mean of `b`.
    AGreater = 0,
    BGreater = 1,
}

/// Opaque image dataset.
pub struct EbcleDataset {
    inner: ImageDataset,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EbcleEntropySummary {
    pub images: usize,
    pub mean_nats: f64,
    pub mean_rounded: f64,
    pub std_nats: f64,
    pub class_cv: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EbcleEstimate {
    pub entropy_nats: f64,
    pub delta_e: f64,
    pub n_upper: u32,
    pub n_lower: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EbclePlan {
    pub n_blocks: u32,
    pub depth: u32,
    pub depth_lower_bound: u32,
    pub at_lower_bound: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EbcleArchConfig {
    pub family: EbcleFamily,
    pub depth: u32,
    /// Base width, growth rate or per-path width depending on the family.
    pub breadth: u32,
    pub height: u32,
    pub width: u32,
    pub channels: u32,
    pub classes: u32,
    /// ResNeXt only; 0 selects 8.
    pub cardinality: u32,
    /// DenseNet only; 0 selects 3.
    pub dense_blocks: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EbcleTTest {
    pub t_stat: f64,
    pub df: u32,
    pub p_one_tailed: f64,
    pub reject_null: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EbcleShapiroWilk {
    pub w_stat: f64,
    pub p_value: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(EbcleStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => EbcleStatus::Io,
            Error::Format(_) | Error::UnsupportedDepth(_) | Error::Spec(_) => EbcleStatus::Format,
            Error::Length(_) => EbcleStatus::Length,
            Error::Consistency(_) => EbcleStatus::Consistency,
            Error::Shape(_) => EbcleStatus::Shape,
            Error::Domain(_) => EbcleStatus::Domain,
            Error::Degenerate(_) => EbcleStatus::Degenerate,
            Error::Config(_) | Error::Usage(_) => EbcleStatus::Config,
            Error::Parse { .. } => EbcleStatus::Parse,
            Error::Training { .. } => EbcleStatus::Training,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EbcleStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EbcleStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EbcleStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EbcleStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            EbcleStatus::Panic
        }
    }
}

fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, per the API contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn dataset_arg<'a>(ds: *const EbcleDataset) -> Result<&'a ImageDataset, Failure> {
    ds.as_ref().map(|d| &d.inner).ok_or_else(|| null("dataset"))
}

impl From<EbcleFamily> for Family {
    fn from(f: EbcleFamily) -> Self {
        match f {
            EbcleFamily::Resnet => Family::ResNet,
            EbcleFamily::Densenet => Family::DenseNet,
            EbcleFamily::Resnext => Family::ResNeXt,
        }
    }
}

impl From<EbcleChannelMode> for ChannelMode {
    fn from(m: EbcleChannelMode) -> Self {
        match m {
            EbcleChannelMode::FlattenAll => ChannelMode::FlattenAll,
            EbcleChannelMode::PerChannelMean => ChannelMode::PerChannelMean,
        }
    }
}

/// Copies the calling thread's last error message into `buf` with a NUL
/// terminator and returns the buffer size it needs, including the NUL.
/// Returns 0 when there is no error. Passing a null `buf` only queries the
/// size.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ebcle_status_str(status: EbcleStatus) -> *const c_char {
    let s: &'static CStr = match status {
        EbcleStatus::Ok => c"ok",
        EbcleStatus::NullPointer => c"null pointer",
        EbcleStatus::InvalidArgument => c"invalid argument",
        EbcleStatus::Io => c"i/o error",
        EbcleStatus::Format => c"format error",
        EbcleStatus::Length => c"length error",
        EbcleStatus::Consistency => c"consistency error",
        EbcleStatus::Shape => c"shape error",
        EbcleStatus::Domain => c"domain error",
        EbcleStatus::Degenerate => c"degenerate input",
        EbcleStatus::Config => c"config error",
        EbcleStatus::Parse => c"parse error",
        EbcleStatus::Training => c"training diverged",
        EbcleStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Loads an MNIST IDX image/label file pair.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_dataset_load_mnist(
    images_path: *const c_char,
    labels_path: *const c_char,
    out: *mut *mut EbcleDataset,
) -> EbcleStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let images = path_arg(images_path, "images_path")?;
        let labels = path_arg(labels_path, "labels_path")?;
        let inner = dataset::load_mnist_idx(&images, &labels)?;
        write_out(out, Box::into_raw(Box::new(EbcleDataset { inner })), "out")
    })
}

/// Loads CIFAR binary batches; `label_bytes` is 1 (CIFAR-10) or 2 (CIFAR-100).
///
/// # Safety
/// `paths` must hold `count` NUL-terminated strings; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_dataset_load_cifar(
    paths: *const *const c_char,
    count: usize,
    label_bytes: u32,
    out: *mut *mut EbcleDataset,
) -> EbcleStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if count == 0 {
            return Err(invalid("no CIFAR batch files given"));
        }
        let raw = slice_arg(paths, count, "paths")?;
        let files = raw
            .iter()
            .map(|&p| path_arg(p, "path"))
            .collect::<Result<Vec<_>, _>>()?;
        let labels = CifarLabels::from_width(label_bytes as usize)?;
        let inner = dataset::load_cifar_binary(&files, labels)?;
        write_out(out, Box::into_raw(Box::new(EbcleDataset { inner })), "out")
    })
}

/// Loads a directory of class-named subdirectories of PGM/PPM files.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_dataset_load_pnm(
    dir: *const c_char,
    out: *mut *mut EbcleDataset,
) -> EbcleStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let dir = path_arg(dir, "dir")?;
        let inner = dataset::load_pnm_dir(Path::new(&dir))?;
        write_out(out, Box::into_raw(Box::new(EbcleDataset { inner })), "out")
    })
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `ds` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ebcle_dataset_free(ds: *mut EbcleDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Image count, height, width, channels and class count of a dataset.
/// Any out pointer may be null.
///
/// # Safety
/// `ds` must be a live handle; non-null out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_dataset_info(
    ds: *const EbcleDataset,
    images: *mut usize,
    height: *mut usize,
    width: *mut usize,
    channels: *mut usize,
    classes: *mut usize,
) -> EbcleStatus {
    guard(|| {
        let d = dataset_arg(ds)?;
        let (h, w, c) = d.shape().unwrap_or((0, 0, 0));
        for (p, v) in [
            (images, d.len()),
            (height, h),
            (width, w),
            (channels, c),
            (classes, d.num_classes),
        ] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Mean per-image entropy of a dataset, in nats.
///
/// # Safety
/// `ds` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_dataset_entropy(
    ds: *const EbcleDataset,
    mode: EbcleChannelMode,
    out: *mut EbcleEntropySummary,
) -> EbcleStatus {
    guard(|| {
        let d = dataset_arg(ds)?;
        let r = entropy::dataset_entropy(d, mode.into())?;
        let summary = EbcleEntropySummary {
            images: r.per_image.len(),
            mean_nats: r.mean_nats,
            mean_rounded: r.mean_rounded,
            std_nats: r.std_nats,
            class_cv: r.class_cv,
        };
        write_out(out, summary, "out")
    })
}

/// Entropy of one interleaved (row, column, channel) 8-bit image.
///
/// # Safety
/// `pixels` must hold `height·width·channels` bytes; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_image_entropy(
    pixels: *const u8,
    height: usize,
    width: usize,
    channels: usize,
    mode: EbcleChannelMode,
    out: *mut f64,
) -> EbcleStatus {
    guard(|| {
        let n = height
            .checked_mul(width)
            .and_then(|x| x.checked_mul(channels))
            .ok_or_else(|| invalid("image size overflows"))?;
        let px = slice_arg(pixels, n, "pixels")?;
        let img = dataset::Image::new(height, width, channels, px.to_vec())?;
        write_out(out, entropy::image_entropy(&img, mode.into())?, "out")
    })
}

/// Block-count estimate from a dataset entropy in nats.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_estimate(entropy_nats: f64, out: *mut EbcleEstimate) -> EbcleStatus {
    guard(|| {
        let e = planner::ebcle(entropy_nats)?;
        let est = EbcleEstimate {
            entropy_nats: e.entropy_nats,
            delta_e: e.delta_e,
            n_upper: e.n_upper,
            n_lower: e.n_lower,
        };
        write_out(out, est, "out")
    })
}

/// Planned depth for a family from a dataset entropy in nats.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_plan(
    entropy_nats: f64,
    family: EbcleFamily,
    use_upper: bool,
    out: *mut EbclePlan,
) -> EbcleStatus {
    guard(|| {
        let e = planner::ebcle(entropy_nats)?;
        let p = planner::plan_depth(family.into(), &e, use_upper);
        let plan = EbclePlan {
            n_blocks: p.n_blocks,
            depth: p.depth,
            depth_lower_bound: p.depth_lower_bound,
            at_lower_bound: p.at_lower_bound,
        };
        write_out(out, plan, "out")
    })
}

/// Trainable parameter count of a family configuration.
///
/// # Safety
/// `config` must point to a valid configuration; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_count_params(
    config: *const EbcleArchConfig,
    out: *mut u64,
) -> EbcleStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        let input = InputShape::new(c.height, c.width, c.channels);
        let graph = match c.family {
            EbcleFamily::Resnet => arch::build_resnet_v1(c.depth, c.breadth, input, c.classes),
            EbcleFamily::Densenet => {
                let mut opts = DenseNetOptions::default();
                if c.dense_blocks != 0 {
                    opts.dense_blocks = c.dense_blocks;
                }
                arch::build_densenet_with(c.depth, c.breadth, input, c.classes, opts)
            }
            EbcleFamily::Resnext => {
                let card = if c.cardinality == 0 { 8 } else { c.cardinality };
                arch::build_resnext_with(
                    c.depth,
                    c.breadth,
                    card,
                    input,
                    c.classes,
                    ResNeXtOptions::default(),
                )
            }
        }?;
        write_out(out, graph.total_params, "out")
    })
}

/// One-tailed paired t-test on `a − b`.
///
/// # Safety
/// `a` and `b` must each hold `n` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_paired_t_test(
    a: *const f64,
    b: *const f64,
    n: usize,
    direction: EbcleDirection,
    out: *mut EbcleTTest,
) -> EbcleStatus {
    guard(|| {
        let a = slice_arg(a, n, "a")?;
        let b = slice_arg(b, n, "b")?;
        let dir = match direction {
            EbcleDirection::AGreater => Direction::AGreater,
            EbcleDirection::BGreater => Direction::BGreater,
        };
        let r = stats::paired_t_one_tailed(a, b, dir)?;
        let t = EbcleTTest {
            t_stat: r.t_stat,
            df: r.df,
            p_one_tailed: r.p_one_tailed,
            reject_null: r.reject_null,
        };
        write_out(out, t, "out")
    })
}

/// Shapiro-Wilk normality test.
///
/// # Safety
/// `x` must hold `n` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_shapiro_wilk(
    x: *const f64,
    n: usize,
    out: *mut EbcleShapiroWilk,
) -> EbcleStatus {
    guard(|| {
        let x = slice_arg(x, n, "x")?;
        let r = stats::shapiro_wilk(x)?;
        write_out(
            out,
            EbcleShapiroWilk {
                w_stat: r.w_stat,
                p_value: r.p_value,
            },
            "out",
        )
    })
}

/// Largest generalization gap allowed by the input compression bound for
/// `n` samples at confidence `1 − delta`, with `i_tx` in bits.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ebcle_compression_bound(
    i_tx: f64,
    delta: f64,
    n: u64,
    out: *mut f64,
) -> EbcleStatus {
    guard(|| {
        write_out(
            out,
            planner::compression_bound_epsilon(i_tx, delta, n)?,
            "out",
        )
    })
}
