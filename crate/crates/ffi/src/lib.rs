//! C ABI over the adarefiner core.
//!
//! Every function returns an [`AdrStatus`]; results go through out-pointers.
//! Handles are opaque and must be released with their `_free` function.
//! After a non-OK status, [`adr_last_error`] describes the failure on the
//! calling thread.
//!
//! Pointer arguments must be null or valid for the access the function
//! documents; handles must come from this library and not be used after free.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use adarefiner::craftworld::{achievement_depth, Achievement, Action, EnvConfig, WorldError, WorldState};
use adarefiner::evalkit::crafter_score;
use adarefiner::policy::{encode_observation, load_checkpoint, CheckpointHeader, PolicyParams};
use adarefiner::textembed::{cosine, embed_hashed, ComprehensionScore, ScoreMode};

/// Number of actions; valid codes are `0..ADR_ACTION_COUNT`.
pub const ADR_ACTION_COUNT: u32 = 17;
/// Number of achievements; valid indices are `0..ADR_ACHIEVEMENT_COUNT`.
pub const ADR_ACHIEVEMENT_COUNT: u32 = 22;
/// Cells in the egocentric view (9 columns by 7 rows).
pub const ADR_VIEW_CELLS: u32 = 63;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EpisodeDone = 3,
    Io = 4,
    Incompatible = 5,
    Panic = 6,
}

/// Player health, food, drink and energy, each in `[0, 9]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdrPlayerStatus {
    pub health: i32,
    pub food: i32,
    pub drink: i32,
    pub energy: i32,
}

/// Outcome of one environment step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdrStepResult {
    pub reward: f64,
    pub done: bool,
    /// Achievements unlocked by this step.
    pub new_unlocks: u32,
    pub health_delta: i32,
}

/// Opaque simulator instance.
pub struct AdrWorld {
    inner: WorldState,
}

/// Opaque policy loaded from a checkpoint.
pub struct AdrPolicy {
    params: PolicyParams,
    header: CheckpointHeader,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl ToString) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("interior NULs removed"));
}

fn fail(status: AdrStatus, message: impl ToString) -> AdrStatus {
    set_error(message);
    status
}

/// Runs `body`, turning panics into [`AdrStatus::Panic`].
fn guard(body: impl FnOnce() -> AdrStatus) -> AdrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(AdrStatus::Panic, msg)
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, AdrStatus> {
    if p.is_null() {
        return Err(fail(AdrStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(AdrStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

macro_rules! deref {
    ($p:expr, $name:literal) => {
        match $p.as_mut() {
            Some(v) => v,
            None => return fail(AdrStatus::NullPointer, concat!($name, " is null")),
        }
    };
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes.
#[no_mangle]
pub unsafe extern "C" fn adr_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a world with default constants on a `size` x `size` map
/// (0 selects the default 64).
#[no_mangle]
pub unsafe extern "C" fn adr_world_new(seed: u64, size: u32, out: *mut *mut AdrWorld) -> AdrStatus {
    guard(|| {
        let out = deref!(out, "out");
        let mut config = EnvConfig::default();
        if size != 0 {
            config.size = size as usize;
        }
        if let Err(e) = config.validate() {
            return fail(AdrStatus::InvalidArgument, e);
        }
        *out = Box::into_raw(Box::new(AdrWorld { inner: WorldState::new(config, seed) }));
        AdrStatus::Ok
    })
}

/// Releases a world. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn adr_world_free(world: *mut AdrWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

#[no_mangle]
pub unsafe extern "C" fn adr_world_reset(world: *mut AdrWorld, seed: u64) -> AdrStatus {
    guard(|| {
        let w = deref!(world, "world");
        w.inner.reset(seed);
        AdrStatus::Ok
    })
}

fn action_arg(code: u32) -> Result<Action, AdrStatus> {
    u8::try_from(code)
        .ok()
        .and_then(Action::from_code)
        .ok_or_else(|| fail(AdrStatus::InvalidArgument, format!("action code {code} out of range")))
}

#[no_mangle]
pub unsafe extern "C" fn adr_world_step(world: *mut AdrWorld, action: u32, out: *mut AdrStepResult) -> AdrStatus {
    guard(|| {
        let w = deref!(world, "world");
        let out = deref!(out, "out");
        let action = match action_arg(action) {
            Ok(a) => a,
            Err(s) => return s,
        };
        match w.inner.step(action) {
            Ok(r) => {
                *out = AdrStepResult {
                    reward: r.reward,
                    done: r.done,
                    new_unlocks: r.unlocks.len() as u32,
                    health_delta: r.health_delta,
                };
                AdrStatus::Ok
            }
            Err(e @ WorldError::EpisodeDone) => fail(AdrStatus::EpisodeDone, e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn adr_world_feasible(world: *const AdrWorld, action: u32, out: *mut bool) -> AdrStatus {
    guard(|| {
        let w = deref!(world.cast_mut(), "world");
        let out = deref!(out, "out");
        match action_arg(action) {
            Ok(a) => {
                *out = w.inner.feasible(a);
                AdrStatus::Ok
            }
            Err(s) => s,
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn adr_world_status(world: *const AdrWorld, out: *mut AdrPlayerStatus) -> AdrStatus {
    guard(|| {
        let w = deref!(world.cast_mut(), "world");
        let out = deref!(out, "out");
        let s = w.inner.status();
        *out = AdrPlayerStatus { health: s.health, food: s.food, drink: s.drink, energy: s.energy };
        AdrStatus::Ok
    })
}

/// Bit `i` is set when achievement `i` (alphabetical order) is unlocked.
#[no_mangle]
pub unsafe extern "C" fn adr_world_unlocked(world: *const AdrWorld, out_mask: *mut u32) -> AdrStatus {
    guard(|| {
        let w = deref!(world.cast_mut(), "world");
        let out = deref!(out_mask, "out_mask");
        *out = w.inner.unlocked().iter().fold(0u32, |m, a| m | (1 << a.index()));
        AdrStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn adr_world_done(world: *const AdrWorld, out: *mut bool) -> AdrStatus {
    guard(|| {
        let w = deref!(world.cast_mut(), "world");
        *deref!(out, "out") = w.inner.done();
        AdrStatus::Ok
    })
}

/// Writes the 9x7 view row by row into `cells` (length `ADR_VIEW_CELLS`).
/// Each byte is a cell code (`0..14`, 255 for off-map) and each entity byte
/// is an entity code (`0..4`, 255 for none).
#[no_mangle]
pub unsafe extern "C" fn adr_world_view(world: *const AdrWorld, cells: *mut u8, entities: *mut u8) -> AdrStatus {
    guard(|| {
        let w = deref!(world.cast_mut(), "world");
        if cells.is_null() || entities.is_null() {
            return fail(AdrStatus::NullPointer, "view buffers are null");
        }
        let cells = std::slice::from_raw_parts_mut(cells, ADR_VIEW_CELLS as usize);
        let entities = std::slice::from_raw_parts_mut(entities, ADR_VIEW_CELLS as usize);
        let obs = w.inner.observation();
        for (i, vc) in obs.local_view.iter().flatten().enumerate() {
            cells[i] = vc.cell.map_or(u8::MAX, |c| c.index() as u8);
            entities[i] = vc.entity.map_or(u8::MAX, |e| e.index() as u8);
        }
        AdrStatus::Ok
    })
}

/// Geometric-mean score over `n` (= 22) success rates given in percent.
#[no_mangle]
pub unsafe extern "C" fn adr_crafter_score(rates: *const f64, n: usize, out: *mut f64) -> AdrStatus {
    guard(|| {
        let out = deref!(out, "out");
        if rates.is_null() {
            return fail(AdrStatus::NullPointer, "rates is null");
        }
        match crafter_score(std::slice::from_raw_parts(rates, n)) {
            Ok(s) => {
                *out = s;
                AdrStatus::Ok
            }
            Err(e) => fail(AdrStatus::InvalidArgument, e),
        }
    })
}

/// Prerequisite depth of achievement `index` in the tech tree (1 to 8).
#[no_mangle]
pub unsafe extern "C" fn adr_achievement_depth(index: u32, out: *mut u32) -> AdrStatus {
    guard(|| {
        let out = deref!(out, "out");
        match Achievement::from_index(index as usize) {
            Some(a) => {
                *out = achievement_depth(a);
                AdrStatus::Ok
            }
            None => fail(AdrStatus::InvalidArgument, format!("achievement index {index} out of range")),
        }
    })
}

/// Comprehension score between two texts under the hashed embedding of
/// dimension `dim`. With `binary`, the result is 1 when the cosine exceeds
/// 0.5 and 0 otherwise.
#[no_mangle]
pub unsafe extern "C" fn adr_text_score(
    goals: *const c_char,
    trajectory: *const c_char,
    dim: usize,
    binary: bool,
    out: *mut f64,
) -> AdrStatus {
    guard(|| {
        let out = deref!(out, "out");
        let (g, t) = match (str_arg(goals, "goals"), str_arg(trajectory, "trajectory")) {
            (Ok(g), Ok(t)) => (g, t),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if dim == 0 {
            return fail(AdrStatus::InvalidArgument, "dim must be positive");
        }
        let cos = cosine(&embed_hashed(g, dim, false), &embed_hashed(t, dim, false));
        let mode = if binary { ScoreMode::Binary } else { ScoreMode::Cosine };
        *out = ComprehensionScore::from_cosine(cos, mode).value();
        AdrStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn adr_policy_load(path: *const c_char, out: *mut *mut AdrPolicy) -> AdrStatus {
    guard(|| {
        let out = deref!(out, "out");
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_checkpoint(Path::new(path)) {
            Ok((params, header)) => {
                *out = Box::into_raw(Box::new(AdrPolicy { params, header }));
                AdrStatus::Ok
            }
            Err(e @ adarefiner::policy::CheckpointError::Io { .. }) => fail(AdrStatus::Io, e),
            Err(e) => fail(AdrStatus::Incompatible, e),
        }
    })
}

/// Releases a policy. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn adr_policy_free(policy: *mut AdrPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Length of the feature vector the policy expects.
#[no_mangle]
pub unsafe extern "C" fn adr_policy_input_dim(policy: *const AdrPolicy, out: *mut usize) -> AdrStatus {
    guard(|| {
        let p = deref!(policy.cast_mut(), "policy");
        *deref!(out, "out") = p.params.input_dim();
        AdrStatus::Ok
    })
}

/// Action probabilities (`ADR_ACTION_COUNT` entries) and state value for a
/// raw feature vector.
#[no_mangle]
pub unsafe extern "C" fn adr_policy_evaluate(
    policy: *const AdrPolicy,
    features: *const f32,
    len: usize,
    out_probs: *mut f64,
    out_value: *mut f64,
) -> AdrStatus {
    guard(|| {
        let p = deref!(policy.cast_mut(), "policy");
        let value = deref!(out_value, "out_value");
        if features.is_null() || out_probs.is_null() {
            return fail(AdrStatus::NullPointer, "features or out_probs is null");
        }
        match p.params.evaluate(std::slice::from_raw_parts(features, len)) {
            Ok((probs, v)) => {
                std::slice::from_raw_parts_mut(out_probs, probs.len()).copy_from_slice(&probs);
                *value = v;
                AdrStatus::Ok
            }
            Err(e) => fail(AdrStatus::InvalidArgument, e),
        }
    })
}

/// Most likely action for the world's current observation, conditioned on
/// `goals` (sub-goals joined with "; "; null or empty means no goals).
#[no_mangle]
pub unsafe extern "C" fn adr_policy_act_greedy(
    policy: *const AdrPolicy,
    world: *const AdrWorld,
    goals: *const c_char,
    out_action: *mut u32,
) -> AdrStatus {
    guard(|| {
        let p = deref!(policy.cast_mut(), "policy");
        let w = deref!(world.cast_mut(), "world");
        let out = deref!(out_action, "out_action");
        let text = if goals.is_null() {
            ""
        } else {
            match str_arg(goals, "goals") {
                Ok(t) => t,
                Err(s) => return s,
            }
        };
        let dim = p.header.embed_dim;
        let goal = embed_hashed(text, dim, false);
        let features = match encode_observation(&w.inner.observation(), &goal, dim) {
            Ok(f) => f,
            Err(e) => return fail(AdrStatus::Incompatible, e),
        };
        match p.params.act_greedy(&features) {
            Ok(a) => {
                *out = a.action.code() as u32;
                AdrStatus::Ok
            }
            Err(e) => fail(AdrStatus::Incompatible, e),
        }
    })
}
