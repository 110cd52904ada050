//! C ABI over `superhol`.
//!
//! Every function returns a [`SuperholStatus`]. On failure a message is kept
//! per thread and can be read with [`superhol_last_error`]. Strings handed
//! out through `char **` parameters are owned by the caller and must be
//! released with [`superhol_string_free`]; handles are released with their
//! own `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use num_complex::Complex64;
use serde::Deserialize;
use superhol::chern::{self, Normalization};
use superhol::forms::{self, FormValue, DEFAULT_EXP_TOL};
use superhol::geometry::registry::{build_action, build_connection, ActionSpec, CocycleSpec, ConnectionSpec, Weight};
use superhol::geometry::{self, u1, Chart, EquivariantGeometry};
use superhol::grassmann::{GrassmannElement, MAX_GENERATORS};
use superhol::scenario::{self, RunOptions, Scenario};
use superhol::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuperholStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Schema = 3,
    Registry = 4,
    Io = 5,
    Dimension = 6,
    Parity = 7,
    Domain = 8,
    ChartExit = 9,
    Consistency = 10,
    Validation = 11,
    LoopValidation = 12,
    Range = 13,
    Numeric = 14,
    Panic = 15,
}

impl From<&Error> for SuperholStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) => Self::Dimension,
            Error::Parity(_) => Self::Parity,
            Error::Domain(_) => Self::Domain,
            Error::ChartExit { .. } => Self::ChartExit,
            Error::Consistency(_) => Self::Consistency,
            Error::Validation(_) => Self::Validation,
            Error::LoopValidation(_) => Self::LoopValidation,
            Error::Range(_) => Self::Range,
            Error::Numeric(_) => Self::Numeric,
            Error::Schema { .. } => Self::Schema,
            Error::Registry(_) => Self::Registry,
            Error::Io(_) => Self::Io,
        }
    }
}

/// A parsed scenario.
pub struct SuperholScenario(Scenario);

/// An element of the Grassmann algebra on `q ≤ 8` generators.
pub struct SuperholGrassmann(GrassmannElement);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(SuperholStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn guard(f: impl FnOnce() -> Res<()>) -> SuperholStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SuperholStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            SuperholStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(Failure(SuperholStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(SuperholStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Res<()> {
    if out.is_null() {
        return Err(Failure(SuperholStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Res<()> {
    let s = CString::new(s).map_err(|e| Failure(SuperholStatus::InvalidUtf8, e.to_string()))?;
    write_out(out, s.into_raw(), "output string pointer")
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure(SuperholStatus::NullPointer, format!("{what} is null")))
}

fn json_failure(e: serde_json::Error) -> Failure {
    Failure(SuperholStatus::Schema, e.to_string())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn superhol_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn superhol_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn superhol_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a scenario document.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn superhol_scenario_from_json(
    json: *const c_char,
    out: *mut *mut SuperholScenario,
) -> SuperholStatus {
    guard(|| {
        let s = Scenario::from_json(read_str(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(SuperholScenario(s))), "out")
    })
}

/// Looks up a built-in scenario, or loads a scenario file when `name` is a
/// path.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn superhol_scenario_resolve(
    name: *const c_char,
    out: *mut *mut SuperholScenario,
) -> SuperholStatus {
    guard(|| {
        let s = scenario::resolve(read_str(name, "name")?)?;
        write_out(out, Box::into_raw(Box::new(SuperholScenario(s))), "out")
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn superhol_scenario_free(scenario: *mut SuperholScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// The scenario serialized back to JSON.
///
/// # Safety
/// `scenario` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn superhol_scenario_to_json(
    scenario: *const SuperholScenario,
    out: *mut *mut c_char,
) -> SuperholStatus {
    guard(|| write_string(out, handle(scenario, "scenario")?.0.to_json()))
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Options {
    out: Option<PathBuf>,
    steps: Option<usize>,
    grid: Option<usize>,
    normalization: Option<Normalization>,
    tolerance_scale: Option<f64>,
}

/// Runs every check and writes the report as JSON to `report`. Failing
/// checks are reported, not returned as errors. `options` may be null or a
/// JSON object with any of `out`, `steps`, `grid`, `normalization` and
/// `tolerance_scale`.
///
/// # Safety
/// `scenario` must be a valid handle, `options` null or a nul-terminated
/// string, and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn superhol_scenario_run(
    scenario: *const SuperholScenario,
    options: *const c_char,
    report: *mut *mut c_char,
) -> SuperholStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let o: Options = if options.is_null() {
            Options::default()
        } else {
            serde_json::from_str(read_str(options, "options")?).map_err(json_failure)?
        };
        let opts = RunOptions {
            out: o.out,
            steps: o.steps,
            grid: o.grid,
            normalization: o.normalization,
            tolerance_scale: o.tolerance_scale.unwrap_or(1.0),
        };
        let outcome = scenario::run(&s.0, &opts)?;
        write_string(report, serde_json::to_string(&outcome.report).expect("serializable"))
    })
}

/// Built-in scenarios and those in `registry` (may be null) as a JSON array.
///
/// # Safety
/// `registry` must be null or a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn superhol_scenario_list(registry: *const c_char, out: *mut *mut c_char) -> SuperholStatus {
    guard(|| {
        let dir = if registry.is_null() {
            None
        } else {
            Some(PathBuf::from(read_str(registry, "registry")?))
        };
        let list = scenario::list_scenarios(dir.as_deref())?;
        write_string(out, serde_json::to_string(&list).expect("serializable"))
    })
}

/// The zero element on `q` generators.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn superhol_grassmann_new(q: usize, out: *mut *mut SuperholGrassmann) -> SuperholStatus {
    guard(|| {
        let e = GrassmannElement::try_zero(q)?;
        write_out(out, Box::into_raw(Box::new(SuperholGrassmann(e))), "out")
    })
}

/// # Safety
/// `element` must be null or a handle from this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn superhol_grassmann_free(element: *mut SuperholGrassmann) {
    if !element.is_null() {
        drop(Box::from_raw(element));
    }
}

fn check_mask(e: &GrassmannElement, mask: usize) -> Res<()> {
    if mask >> e.num_generators() != 0 {
        return Err(Failure(
            SuperholStatus::Range,
            format!("mask {mask:#b} uses more than {} generators", e.num_generators()),
        ));
    }
    Ok(())
}

/// Sets the coefficient of the monomial whose generators are the set bits
/// of `mask`.
///
/// # Safety
/// `element` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn superhol_grassmann_set(
    element: *mut SuperholGrassmann,
    mask: usize,
    re: f64,
    im: f64,
) -> SuperholStatus {
    guard(|| {
        let e = element
            .as_mut()
            .ok_or_else(|| Failure(SuperholStatus::NullPointer, "element is null".into()))?;
        check_mask(&e.0, mask)?;
        e.0.set_coeff(mask, Complex64::new(re, im));
        Ok(())
    })
}

/// # Safety
/// `element` must be a valid handle; `re` and `im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn superhol_grassmann_get(
    element: *const SuperholGrassmann,
    mask: usize,
    re: *mut f64,
    im: *mut f64,
) -> SuperholStatus {
    guard(|| {
        let e = handle(element, "element")?;
        check_mask(&e.0, mask)?;
        let z = e.0.coeff(mask);
        write_out(re, z.re, "re")?;
        write_out(im, z.im, "im")
    })
}

/// Product `a·b`, a new handle.
///
/// # Safety
/// `a` and `b` must be valid handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn superhol_grassmann_mul(
    a: *const SuperholGrassmann,
    b: *const SuperholGrassmann,
    out: *mut *mut SuperholGrassmann,
) -> SuperholStatus {
    guard(|| {
        let p = handle(a, "a")?.0.try_mul(&handle(b, "b")?.0)?;
        write_out(out, Box::into_raw(Box::new(SuperholGrassmann(p))), "out")
    })
}

/// Largest supported generator count.
#[no_mangle]
pub extern "C" fn superhol_grassmann_max_generators() -> usize {
    MAX_GENERATORS
}

/// `exp` of an even form given as JSON, `{"n", "d", "coeffs": [{"mask",
/// "matrix": [[{"re", "im"}]]}]}`; the result uses the same layout.
///
/// # Safety
/// `form` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn superhol_form_exp_even(form: *const c_char, out: *mut *mut c_char) -> SuperholStatus {
    guard(|| {
        let f: FormValue = serde_json::from_str(read_str(form, "form")?).map_err(json_failure)?;
        let e = forms::exp_even(&f, DEFAULT_EXP_TOL)?;
        write_string(out, serde_json::to_string(&e).expect("serializable"))
    })
}

fn point_geometry(weights: &[i64]) -> superhol::Result<EquivariantGeometry> {
    let group = u1();
    let chart = Chart::point("pt");
    let cocycle = CocycleSpec::Weights {
        weights: weights.iter().map(|w| Weight::Single(*w)).collect(),
    };
    let action = build_action(&ActionSpec::Trivial, &cocycle, &group, &chart, weights.len())?;
    let connection = build_connection(&ConnectionSpec::Flat, &chart, weights.len())?;
    EquivariantGeometry::new(chart, group, action, connection)
}

/// Bouquet entry of U(1) acting on a point through `weights`, at
/// `g = e^{iφ}` and `X = iξ`; its value is `Σ_k e^{i n_k (φ + ξ)}`.
///
/// # Safety
/// `weights` must point to `len` integers; `re` and `im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn superhol_point_character(
    weights: *const i64,
    len: usize,
    phi: f64,
    xi: f64,
    re: *mut f64,
    im: *mut f64,
) -> SuperholStatus {
    guard(|| {
        if weights.is_null() || len == 0 {
            return Err(Failure(SuperholStatus::NullPointer, "weights are missing".into()));
        }
        let w = std::slice::from_raw_parts(weights, len);
        let geom = point_geometry(w)?;
        let g = geom.group.exp_coords(&[phi])?;
        let x = geom.group.lie_element(&[xi])?;
        let stratum = geometry::point_stratum(&geom, &g, "pt", vec![])?;
        let entry = chern::chern_character(&geom, &g, &x, &stratum, Normalization::Raw)?;
        let z = entry.form_at(&[])?.scalar_coeff(0);
        write_out(re, z.re, "re")?;
        write_out(im, z.im, "im")
    })
}
