//! C interface to `fpprep`.
//!
//! Every function returns an [`FppStatus`]. On failure a message is kept per
//! thread and can be read with [`fpp_last_error_message`]. Datasets are opaque
//! handles released with [`fpp_dataset_free`]; byte buffers returned by the
//! library are released with [`fpp_bytes_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fpprep::codec;
use fpprep::fp::shared_bits;
use fpprep::gd::{gd_compress, gd_decompress, GdArchive};
use fpprep::transforms::{self, Params, PreprocessedDataset, Technique, TransformError};

pub const FPP_TECHNIQUE_BINS: u8 = 0;
pub const FPP_TECHNIQUE_MULSHIFT: u8 = 1;
pub const FPP_TECHNIQUE_EVENODD: u8 = 2;
pub const FPP_TECHNIQUE_EVENNESS: u8 = 3;
pub const FPP_TECHNIQUE_IDENTITY: u8 = 4;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FppStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input contains NaN, infinity, a negative value or a subnormal.
    Unsupported = 3,
    /// The requested `d` cannot be reached with these parameters.
    Capacity = 4,
    NonConvergence = 5,
    /// Corrupt container or archive.
    Integrity = 6,
    /// Output buffer too small; the required length was written.
    BufferTooSmall = 7,
    Internal = 8,
}

/// Opaque transformed dataset.
pub struct FppDataset {
    inner: PreprocessedDataset,
}

/// Library-owned bytes.
#[repr(C)]
pub struct FppBytes {
    pub data: *mut u8,
    pub len: usize,
}

#[repr(C)]
#[derive(Debug, Default, Clone, Copy)]
pub struct FppSharedBits {
    pub s_sign: u32,
    pub s_e: u32,
    pub s_m: u32,
    pub s_tot: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: FppStatus, msg: impl Into<String>) -> FppStatus {
    set_error(msg);
    status
}

fn transform_status(e: &TransformError) -> FppStatus {
    match e {
        TransformError::Unsupported { .. } | TransformError::EmptyInput => FppStatus::Unsupported,
        TransformError::InvalidParameter(_) => FppStatus::InvalidArgument,
        TransformError::Capacity { .. } | TransformError::InfeasibleShift { .. } => FppStatus::Capacity,
        TransformError::NonConvergence { .. } | TransformError::RangeExhausted { .. } => {
            FppStatus::NonConvergence
        }
        TransformError::Integrity(_) => FppStatus::Integrity,
        TransformError::Fp(_) | TransformError::PredicateViolation(_) => FppStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> FppStatus) -> FppStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(FppStatus::Internal, "panic inside fpprep"))
}

unsafe fn slice<'a, T>(data: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if data.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(data, len))
    }
}

unsafe fn write_values(values: &[f64], out: *mut f64, capacity: usize, out_len: *mut usize) -> FppStatus {
    *out_len = values.len();
    if values.len() > capacity {
        return fail(
            FppStatus::BufferTooSmall,
            format!("{} values do not fit in {capacity}", values.len()),
        );
    }
    if !values.is_empty() {
        if out.is_null() {
            return fail(FppStatus::NullPointer, "output buffer is null");
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    FppStatus::Ok
}

fn into_bytes(bytes: Vec<u8>) -> FppBytes {
    let boxed = bytes.into_boxed_slice();
    let len = boxed.len();
    FppBytes {
        data: Box::into_raw(boxed).cast::<u8>(),
        len,
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn fpp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Transforms `n` values. `k` is only read for the bins technique.
///
/// # Safety
/// `values` must point to `n` readable doubles and `out` to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fpp_forward(
    values: *const f64,
    n: usize,
    technique: u8,
    d: u32,
    k: usize,
    out: *mut *mut FppDataset,
) -> FppStatus {
    guard(|| {
        if out.is_null() {
            return fail(FppStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(ds) = slice(values, n) else {
            return fail(FppStatus::NullPointer, "values is null");
        };
        let params = match Technique::from_id(technique) {
            Some(Technique::Bins) => Params::Bins { k, d },
            Some(Technique::MulShift) => Params::MulShift { d },
            Some(Technique::EvenOdd) => Params::EvenOdd { d },
            Some(Technique::Evenness) => Params::Evenness { d },
            _ => {
                return fail(
                    FppStatus::InvalidArgument,
                    format!("unknown technique {technique}"),
                )
            }
        };
        match transforms::forward(ds, params) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FppDataset { inner }));
                FppStatus::Ok
            }
            Err(e) => fail(transform_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `dataset` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpp_dataset_free(dataset: *mut FppDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Length of the original dataset, or 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpp_dataset_len(dataset: *const FppDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.original_len())
}

/// Technique id actually applied; constant inputs report the identity id.
///
/// # Safety
/// `dataset` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpp_dataset_technique(dataset: *const FppDataset, out: *mut u8) -> FppStatus {
    guard(|| match (dataset.as_ref(), out.is_null()) {
        (Some(d), false) => {
            *out = d.inner.technique().id();
            FppStatus::Ok
        }
        _ => fail(FppStatus::NullPointer, "null argument"),
    })
}

/// Bytes of metadata the container stores for this dataset.
///
/// # Safety
/// `dataset` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_metadata_size(dataset: *const FppDataset, out: *mut usize) -> FppStatus {
    guard(|| match (dataset.as_ref(), out.is_null()) {
        (Some(d), false) => {
            *out = codec::metadata_size_bytes(&d.inner);
            FppStatus::Ok
        }
        _ => fail(FppStatus::NullPointer, "null argument"),
    })
}

/// Serializes a dataset. Release `out` with [`fpp_bytes_free`].
///
/// # Safety
/// `dataset` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_encode(dataset: *const FppDataset, out: *mut FppBytes) -> FppStatus {
    guard(|| match (dataset.as_ref(), out.is_null()) {
        (Some(d), false) => {
            *out = into_bytes(codec::encode(&d.inner));
            FppStatus::Ok
        }
        _ => fail(FppStatus::NullPointer, "null argument"),
    })
}

/// # Safety
/// `bytes` must point to `len` readable bytes and `out` to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fpp_decode(bytes: *const u8, len: usize, out: *mut *mut FppDataset) -> FppStatus {
    guard(|| {
        if out.is_null() {
            return fail(FppStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(bytes) = slice(bytes, len) else {
            return fail(FppStatus::NullPointer, "bytes is null");
        };
        match codec::decode(bytes) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FppDataset { inner }));
                FppStatus::Ok
            }
            Err(e) => fail(FppStatus::Integrity, e.to_string()),
        }
    })
}

/// Restores the original values into `out`. `out_len` receives the number of
/// values, also when the buffer is too small.
///
/// # Safety
/// `dataset` must be a live handle, `out` writable for `capacity` doubles and
/// `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_inverse(
    dataset: *const FppDataset,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> FppStatus {
    guard(|| {
        let Some(d) = dataset.as_ref() else {
            return fail(FppStatus::NullPointer, "dataset is null");
        };
        if out_len.is_null() {
            return fail(FppStatus::NullPointer, "out_len is null");
        }
        match transforms::inverse(&d.inner) {
            Ok(values) => write_values(&values, out, capacity, out_len),
            Err(e) => fail(transform_status(&e), e.to_string()),
        }
    })
}

/// Shared-bit archive of `n` values. Release `out` with [`fpp_bytes_free`].
///
/// # Safety
/// `values` must point to `n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_gd_compress(values: *const f64, n: usize, out: *mut FppBytes) -> FppStatus {
    guard(|| {
        let Some(ds) = slice(values, n) else {
            return fail(FppStatus::NullPointer, "values is null");
        };
        if out.is_null() {
            return fail(FppStatus::NullPointer, "out is null");
        }
        match gd_compress(ds) {
            Ok(a) => {
                *out = into_bytes(a.to_bytes());
                FppStatus::Ok
            }
            Err(e) => fail(FppStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `bytes` must point to `len` readable bytes, `out` be writable for
/// `capacity` doubles and `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_gd_decompress(
    bytes: *const u8,
    len: usize,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> FppStatus {
    guard(|| {
        let Some(bytes) = slice(bytes, len) else {
            return fail(FppStatus::NullPointer, "bytes is null");
        };
        if out_len.is_null() {
            return fail(FppStatus::NullPointer, "out_len is null");
        }
        match GdArchive::from_bytes(bytes).and_then(|a| gd_decompress(&a)) {
            Ok(values) => write_values(&values, out, capacity, out_len),
            Err(e) => fail(FppStatus::Integrity, e.to_string()),
        }
    })
}

/// # Safety
/// `values` must point to `n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_shared_bits(values: *const f64, n: usize, out: *mut FppSharedBits) -> FppStatus {
    guard(|| {
        let Some(ds) = slice(values, n) else {
            return fail(FppStatus::NullPointer, "values is null");
        };
        if out.is_null() {
            return fail(FppStatus::NullPointer, "out is null");
        }
        match shared_bits(ds) {
            Ok(s) => {
                *out = FppSharedBits {
                    s_sign: s.s_sign,
                    s_e: s.s_e,
                    s_m: s.s_m,
                    s_tot: s.s_tot,
                };
                FppStatus::Ok
            }
            Err(e) => fail(FppStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `bytes` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fpp_bytes_free(bytes: FppBytes) {
    if !bytes.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(
            bytes.data, bytes.len,
        )));
    }
}
