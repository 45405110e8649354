//! C ABI over the neurocoevo toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller owns and
//! releases with the matching `*_free` function. Every function returns an
//! [`NcStatus`]; on failure a description is available from
//! [`nc_last_error_message`] on the same thread. Strings handed out by the
//! library are released with [`nc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use neurocoevo::coevo::{aggregate, AggregationKind, CoevoError};
use neurocoevo::cppn::{feed_forward, CppnError, Genome};
use neurocoevo::decoder::{build_morphology, decode_controller, ControllerMap, DecodeError, Dims, Morphology};
use neurocoevo::sim::{simulate_displacement, SimError, SimParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ArityMismatch = 4,
    InvalidGenome = 5,
    EmptyMorphology = 6,
    DomainMismatch = 7,
    NumericalBlowup = 8,
    InvalidArgument = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcAggregation {
    Am = 0,
    Wm = 1,
    Gm = 2,
    Hm = 3,
}

impl From<NcAggregation> for AggregationKind {
    fn from(a: NcAggregation) -> Self {
        match a {
            NcAggregation::Am => AggregationKind::AM,
            NcAggregation::Wm => AggregationKind::WM,
            NcAggregation::Gm => AggregationKind::GM,
            NcAggregation::Hm => AggregationKind::HM,
        }
    }
}

/// A CPPN genome.
pub struct NcGenome(Genome);

/// A decoded, connected voxel body.
pub struct NcMorphology(Morphology);

/// Phase offsets for the contractile voxels of one morphology.
pub struct NcController(ControllerMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(NcStatus, String);

type FfiResult<T> = Result<T, Failure>;

impl From<CppnError> for Failure {
    fn from(e: CppnError) -> Self {
        let status = match e {
            CppnError::ArityMismatch { .. } => NcStatus::ArityMismatch,
            CppnError::CycleDetected | CppnError::MissingNode(_) => NcStatus::InvalidGenome,
        };
        Failure(status, e.to_string())
    }
}

impl From<DecodeError> for Failure {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Cppn(e) => e.into(),
            DecodeError::EmptyMorphology => Failure(NcStatus::EmptyMorphology, e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let status = match e {
            SimError::EmptyMorphology => NcStatus::EmptyMorphology,
            SimError::NumericalBlowup { .. } => NcStatus::NumericalBlowup,
            SimError::DomainMismatch { .. } => NcStatus::DomainMismatch,
            SimError::UnstableTimeStep { .. } | SimError::InvalidParams(_) => NcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<CoevoError> for Failure {
    fn from(e: CoevoError) -> Self {
        let status = match e {
            CoevoError::WeightArityMismatch { .. } => NcStatus::ArityMismatch,
            _ => NcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(body: impl FnOnce() -> FfiResult<()>) -> NcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            NcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(NcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(NcStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|e| Failure(NcStatus::InvalidArgument, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn parse_error(e: impl std::fmt::Display) -> Failure {
    Failure(NcStatus::ParseError, e.to_string())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a
/// successful call. The pointer stays valid until the next call into the
/// library from this thread.
#[no_mangle]
pub extern "C" fn nc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a genome from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_genome_from_json(json: *const c_char, out: *mut *mut NcGenome) -> NcStatus {
    guard(|| {
        let genome = Genome::from_json(text(json, "json")?).map_err(parse_error)?;
        put(out, NcGenome(genome))
    })
}

/// # Safety
/// `genome` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_genome_to_json(genome: *const NcGenome, out: *mut *mut c_char) -> NcStatus {
    guard(|| put_string(out, borrow(genome, "genome")?.0.to_json()))
}

/// # Safety
/// `genome` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_genome_free(genome: *mut NcGenome) {
    release(genome);
}

/// Evaluates the genome once. `inputs` holds `num_inputs` values and
/// `outputs` receives `num_outputs`; both counts must match the genome.
///
/// # Safety
/// The arrays must hold at least the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn nc_feed_forward(
    genome: *const NcGenome,
    inputs: *const f64,
    num_inputs: usize,
    outputs: *mut f64,
    num_outputs: usize,
) -> NcStatus {
    guard(|| {
        let genome = &borrow(genome, "genome")?.0;
        if inputs.is_null() && num_inputs > 0 {
            return Err(null("inputs"));
        }
        if outputs.is_null() {
            return Err(null("outputs"));
        }
        if num_outputs != genome.num_outputs {
            return Err(CppnError::ArityMismatch {
                expected_inputs: genome.num_inputs,
                expected_outputs: genome.num_outputs,
                actual_inputs: num_inputs,
                actual_outputs: num_outputs,
            }
            .into());
        }
        let inputs = if num_inputs == 0 { &[][..] } else { slice::from_raw_parts(inputs, num_inputs) };
        let values = feed_forward(genome, inputs)?;
        slice::from_raw_parts_mut(outputs, num_outputs).copy_from_slice(&values);
        Ok(())
    })
}

/// Decodes a SAM genome over an `nx` x `ny` x `nz` canvas, optionally
/// forcing the passive shell, and keeps the part connected to the anchored
/// face.
///
/// # Safety
/// `genome` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_morphology_decode(
    genome: *const NcGenome,
    nx: usize,
    ny: usize,
    nz: usize,
    enclosure: bool,
    out: *mut *mut NcMorphology,
) -> NcStatus {
    guard(|| {
        let genome = &borrow(genome, "genome")?.0;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Failure(NcStatus::InvalidArgument, "canvas dimensions must be positive".into()));
        }
        let morph = build_morphology(genome, Dims::new(nx, ny, nz), enclosure)?;
        put(out, NcMorphology(morph))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_morphology_from_json(json: *const c_char, out: *mut *mut NcMorphology) -> NcStatus {
    guard(|| {
        let morph = Morphology::from_json(text(json, "json")?).map_err(parse_error)?;
        put(out, NcMorphology(morph))
    })
}

/// # Safety
/// `morph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_morphology_to_json(morph: *const NcMorphology, out: *mut *mut c_char) -> NcStatus {
    guard(|| put_string(out, borrow(morph, "morphology")?.0.to_json()))
}

/// Present voxels, or 0 for a NULL handle.
///
/// # Safety
/// `morph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_morphology_voxel_count(morph: *const NcMorphology) -> usize {
    morph.as_ref().map_or(0, |m| m.0.voxel_count())
}

/// # Safety
/// `morph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_morphology_contractile_count(morph: *const NcMorphology) -> usize {
    morph.as_ref().map_or(0, |m| m.0.contractile_cells().len())
}

/// # Safety
/// `morph` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_morphology_free(morph: *mut NcMorphology) {
    release(morph);
}

/// Decodes a controller genome into one phase per contractile voxel of
/// `morph`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_controller_decode(
    genome: *const NcGenome,
    morph: *const NcMorphology,
    out: *mut *mut NcController,
) -> NcStatus {
    guard(|| {
        let genome = &borrow(genome, "genome")?.0;
        let morph = &borrow(morph, "morphology")?.0;
        put(out, NcController(decode_controller(genome, morph)?))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_controller_from_json(json: *const c_char, out: *mut *mut NcController) -> NcStatus {
    guard(|| {
        let ctrl = ControllerMap::from_json(text(json, "json")?).map_err(parse_error)?;
        put(out, NcController(ctrl))
    })
}

/// # Safety
/// `ctrl` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_controller_to_json(ctrl: *const NcController, out: *mut *mut c_char) -> NcStatus {
    guard(|| put_string(out, borrow(ctrl, "controller")?.0.to_json()))
}

/// # Safety
/// `ctrl` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_controller_len(ctrl: *const NcController) -> usize {
    ctrl.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `ctrl` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_controller_free(ctrl: *mut NcController) {
    release(ctrl);
}

/// Simulates the pair and writes the yz displacement of the free end.
/// `params_json` holds `{material, actuation, sim}` settings; NULL uses the
/// defaults.
///
/// # Safety
/// Handles must be live, `params_json` NULL or NUL-terminated, `out_delta`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nc_simulate_displacement(
    morph: *const NcMorphology,
    ctrl: *const NcController,
    params_json: *const c_char,
    out_delta: *mut f64,
) -> NcStatus {
    guard(|| {
        let morph = &borrow(morph, "morphology")?.0;
        let ctrl = &borrow(ctrl, "controller")?.0;
        if out_delta.is_null() {
            return Err(null("out_delta"));
        }
        let params: SimParams = if params_json.is_null() {
            SimParams::default()
        } else {
            serde_json::from_str(text(params_json, "params_json")?).map_err(parse_error)?
        };
        params.validate()?;
        *out_delta = simulate_displacement(morph, ctrl, &params)?;
        Ok(())
    })
}

/// Aggregates `len` displacements into one aptitude.
///
/// # Safety
/// `deltas` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_aggregate(
    kind: NcAggregation,
    deltas: *const f64,
    len: usize,
    out: *mut f64,
) -> NcStatus {
    guard(|| {
        if deltas.is_null() {
            return Err(null("deltas"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if len == 0 {
            return Err(Failure(NcStatus::InvalidArgument, "no displacements".into()));
        }
        *out = aggregate(kind.into(), slice::from_raw_parts(deltas, len))?;
        Ok(())
    })
}
