//! C ABI for the cdgate simulator.
//!
//! Configs and gate results are opaque handles created and freed through
//! this interface. Every fallible call returns a [`CdgStatus`]; on failure
//! [`cdg_last_error_message`] describes the error for the calling thread.
//! Panics never cross the boundary and are reported as
//! [`CdgStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cdgate::cli::pulse_curves;
use cdgate::config::{load_preset, set_path, RunConfig};
use cdgate::gate::{prepare_bell, run_cz, GateRun, INPUTS};
use cdgate::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidParameter = 4,
    /// Integration failed: step underflow, non-finite state or trace drift.
    Numerical = 5,
    PhaseUndefined = 6,
    Io = 7,
    BufferTooSmall = 8,
    IndexOutOfRange = 9,
    Panic = 10,
    Other = 11,
}

/// Opaque run configuration.
pub struct CdgConfig(RunConfig);

/// Opaque result of a CZ run over the four logical inputs.
pub struct CdgGateResult(GateRun);

/// Bell-state preparation score.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CdgBellScore {
    pub fidelity: f64,
    pub fidelity_uncorrected: f64,
    pub infidelity: f64,
    pub correction_phase: f64,
    pub p00: f64,
    pub p11: f64,
    pub coherence_00_11: f64,
    pub leakage: f64,
    pub wall_clock_s: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CdgStatus {
    match e.kind() {
        "config" | "unit" | "json" | "csv" => CdgStatus::Config,
        "invalid_parameter" | "scheme_mismatch" | "unknown_label" => CdgStatus::InvalidParameter,
        "step_underflow" | "non_finite" | "trace_drift" => CdgStatus::Numerical,
        "phase_undefined" => CdgStatus::PhaseUndefined,
        "io" => CdgStatus::Io,
        _ => CdgStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CdgStatus, String)>) -> CdgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CdgStatus::Panic
        }
    }
}

fn lib(e: Error) -> (CdgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CdgStatus, String) {
    (CdgStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CdgStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CdgStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (CdgStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (CdgStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cdg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cdg_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Parses a TOML config. On success `*out` owns a new handle.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdg_config_from_toml(toml: *const c_char, out: *mut *mut CdgConfig) -> CdgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg = RunConfig::from_toml_str(str_arg(toml, "toml")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(CdgConfig(cfg)));
        Ok(())
    })
}

/// Loads a bundled preset by name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdg_config_from_preset(name: *const c_char, out: *mut *mut CdgConfig) -> CdgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg = load_preset(str_arg(name, "name")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(CdgConfig(cfg)));
        Ok(())
    })
}

/// Sets the field at dotted `path` to a TOML value literal, for example
/// `cdg_config_set(cfg, "gate.blockade", "\"2 GHz_over_2pi\"")`. The
/// config is left unchanged if the result does not validate.
///
/// # Safety
/// `cfg` must be a live handle; `path` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn cdg_config_set(cfg: *mut CdgConfig, path: *const c_char, value: *const c_char) -> CdgStatus {
    guard(|| {
        let cfg = out_arg(cfg, "cfg")?;
        let path = str_arg(path, "path")?;
        let text = str_arg(value, "value")?;
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {text}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .ok_or_else(|| (CdgStatus::Config, format!("`{text}` is not a TOML value")))?;
        let mut table = cfg.0.to_table().map_err(lib)?;
        set_path(&mut table, path, value).map_err(lib)?;
        cfg.0 = RunConfig::from_table(table).map_err(lib)?;
        Ok(())
    })
}

/// Frees a config handle. NULL is ignored.
///
/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cdg_config_free(cfg: *mut CdgConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Prepares and scores the Bell state.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdg_bell(cfg: *const CdgConfig, out: *mut CdgBellScore) -> CdgStatus {
    guard(|| {
        let cfg = ref_arg(cfg, "cfg")?;
        let out = out_arg(out, "out")?;
        let proto = cfg.0.protocol_config().map_err(lib)?;
        let s = prepare_bell(&proto).map_err(lib)?.score;
        *out = CdgBellScore {
            fidelity: s.fidelity,
            fidelity_uncorrected: s.fidelity_uncorrected,
            infidelity: s.infidelity,
            correction_phase: s.correction_phase,
            p00: s.p00,
            p11: s.p11,
            coherence_00_11: s.coherence_00_11,
            leakage: s.leakage,
            wall_clock_s: s.wall_clock_s,
        };
        Ok(())
    })
}

/// Runs the CZ protocol on the inputs `00, 01, 10, 11` (indices 0 to 3).
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdg_gate_run(cfg: *const CdgConfig, out: *mut *mut CdgGateResult) -> CdgStatus {
    guard(|| {
        let cfg = ref_arg(cfg, "cfg")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let proto = cfg.0.protocol_config().map_err(lib)?;
        let run = run_cz(&proto).map_err(lib)?;
        *out = Box::into_raw(Box::new(CdgGateResult(run)));
        Ok(())
    })
}

unsafe fn input_of<'a>(res: *const CdgGateResult, index: usize) -> Result<&'a cdgate::gate::InputRun, (CdgStatus, String)> {
    let res = ref_arg(res, "result")?;
    res.0.inputs.get(index).ok_or_else(|| {
        (
            CdgStatus::IndexOutOfRange,
            format!("input index {index} outside 0..{}", INPUTS.len()),
        )
    })
}

/// Probability of returning to input `index`.
///
/// # Safety
/// `res` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdg_gate_return_population(res: *const CdgGateResult, index: usize, out: *mut f64) -> CdgStatus {
    guard(|| {
        let r = input_of(res, index)?;
        *out_arg(out, "out")? = r.return_population;
        Ok(())
    })
}

/// Population leaked outside the `{0, 1, r}` manifold for input `index`.
///
/// # Safety
/// `res` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdg_gate_leakage(res: *const CdgGateResult, index: usize, out: *mut f64) -> CdgStatus {
    guard(|| {
        let r = input_of(res, index)?;
        *out_arg(out, "out")? = r.leakage;
        Ok(())
    })
}

/// Phase of input `index` relative to `|00>`, in `(-pi, pi]`. Fails with
/// `PhaseUndefined` for density-matrix runs or vanishing amplitudes.
///
/// # Safety
/// `res` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdg_gate_phase(res: *const CdgGateResult, index: usize, out: *mut f64) -> CdgStatus {
    guard(|| {
        let r = input_of(res, index)?;
        let out = out_arg(out, "out")?;
        *out = r.phase.ok_or_else(|| {
            (
                CdgStatus::PhaseUndefined,
                format!("phase of |{}> is undefined", r.input),
            )
        })?;
        Ok(())
    })
}

/// `phi11 + phi00 - phi01 - phi10`, wrapped to `(-pi, pi]`.
///
/// # Safety
/// `res` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cdg_gate_conditional_phase(res: *const CdgGateResult, out: *mut f64) -> CdgStatus {
    guard(|| {
        let res = ref_arg(res, "result")?;
        let out = out_arg(out, "out")?;
        *out = res
            .0
            .conditional_phase
            .ok_or_else(|| (CdgStatus::PhaseUndefined, "conditional phase is undefined".to_string()))?;
        Ok(())
    })
}

/// Frees a gate result. NULL is ignored.
///
/// # Safety
/// `res` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cdg_gate_free(res: *mut CdgGateResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Samples `Omega0`, the counterdiabatic term and the detuning (rad/us)
/// on `2 * points_per_pulse + 1` uniform times (us). Each output array must
/// hold `capacity` values. `*written` receives the number of samples; if
/// `capacity` is too small nothing is written, `*written` holds the needed
/// size and `BufferTooSmall` is returned.
///
/// # Safety
/// `cfg` must be a live handle, `written` a valid pointer, and each array
/// valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn cdg_pulse_sample(
    cfg: *const CdgConfig,
    points_per_pulse: usize,
    t_us: *mut f64,
    omega0: *mut f64,
    omega_cd: *mut f64,
    delta: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CdgStatus {
    guard(|| {
        let cfg = ref_arg(cfg, "cfg")?;
        let written = out_arg(written, "written")?;
        let table = pulse_curves(&cfg.0, points_per_pulse).map_err(lib)?;
        *written = table.len();
        if capacity < table.len() {
            return Err((
                CdgStatus::BufferTooSmall,
                format!("need {} samples, capacity {capacity}", table.len()),
            ));
        }
        for (dst, src) in [
            (t_us, &table.t_us),
            (omega0, &table.omega0),
            (omega_cd, &table.omega_cd),
            (delta, &table.delta),
        ] {
            if dst.is_null() {
                return Err(null("output array"));
            }
            ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        let e = Error::Config {
            field: "x".into(),
            reason: "y".into(),
        };
        assert_eq!(status_of(&e), CdgStatus::Config);
        let e = Error::Input {
            input: "01".into(),
            source: Box::new(Error::TraceDrift { t: 0.0, trace: 2.0 }),
        };
        assert_eq!(status_of(&e), CdgStatus::Numerical);
    }

    #[test]
    fn panic_is_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, CdgStatus::Panic);
        let msg = unsafe { CStr::from_ptr(cdg_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }
}
