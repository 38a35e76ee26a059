use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use adarefiner::craftworld::{Action, EnvConfig, WorldState};
use adarefiner::policy::{feature_len, save_checkpoint, PolicyParams};
use adarefiner_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { adr_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn new_world(seed: u64, size: u32) -> *mut AdrWorld {
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { adr_world_new(seed, size, &mut w) }, AdrStatus::Ok);
    w
}

#[test]
fn world_handle_matches_the_library() {
    let w = new_world(11, 20);
    let mut reference = WorldState::new(EnvConfig { size: 20, ..EnvConfig::default() }, 11);
    let mut cells = [0u8; 63];
    let mut ents = [0u8; 63];
    for i in 0..300u32 {
        let code = (i * 7 + 3) % 17;
        let action = Action::from_code(code as u8).unwrap();
        let mut feasible = false;
        unsafe { assert_eq!(adr_world_feasible(w, code, &mut feasible), AdrStatus::Ok) };
        assert_eq!(feasible, reference.feasible(action));
        let mut r = AdrStepResult::default();
        unsafe { assert_eq!(adr_world_step(w, code, &mut r), AdrStatus::Ok) };
        let expected = reference.step(action).unwrap();
        assert_eq!(r.reward, expected.reward);
        assert_eq!(r.done, expected.done);
        assert_eq!(r.new_unlocks as usize, expected.unlocks.len());
        if r.done {
            break;
        }
    }
    let mut mask = 0u32;
    let mut status = AdrPlayerStatus::default();
    unsafe {
        assert_eq!(adr_world_unlocked(w, &mut mask), AdrStatus::Ok);
        assert_eq!(adr_world_status(w, &mut status), AdrStatus::Ok);
        assert_eq!(adr_world_view(w, cells.as_mut_ptr(), ents.as_mut_ptr()), AdrStatus::Ok);
    }
    assert_eq!(mask.count_ones() as usize, reference.unlocked().len());
    assert_eq!(status.health, reference.status().health);
    assert_eq!(ents[3 * 9 + 4], 0, "player sits at the view centre");
    unsafe { adr_world_free(w) };
}

#[test]
fn errors_are_reported_with_codes_and_messages() {
    unsafe {
        let mut r = AdrStepResult::default();
        assert_eq!(adr_world_step(ptr::null_mut(), 0, &mut r), AdrStatus::NullPointer);
        assert!(last_error().contains("world"));
        let w = new_world(1, 16);
        assert_eq!(adr_world_step(w, 17, &mut r), AdrStatus::InvalidArgument);
        assert!(last_error().contains("17"));
        let mut bad = ptr::null_mut();
        assert_eq!(adr_world_new(1, 3, &mut bad), AdrStatus::InvalidArgument);
        assert!(bad.is_null());

        let mut done = false;
        while !done {
            assert_eq!(adr_world_step(w, 0, &mut r), AdrStatus::Ok);
            assert_eq!(adr_world_done(w, &mut done), AdrStatus::Ok);
        }
        assert_eq!(adr_world_step(w, 0, &mut r), AdrStatus::EpisodeDone);
        assert_eq!(adr_world_reset(w, 2), AdrStatus::Ok);
        assert_eq!(adr_world_step(w, 0, &mut r), AdrStatus::Ok);
        adr_world_free(w);
        adr_world_free(ptr::null_mut());

        let mut depth = 0;
        assert_eq!(adr_achievement_depth(22, &mut depth), AdrStatus::InvalidArgument);
        let mut score = 0.0;
        assert_eq!(adr_crafter_score([1.0; 3].as_ptr(), 3, &mut score), AdrStatus::InvalidArgument);
    }
}

#[test]
fn scoring_helpers() {
    unsafe {
        let mut score = -1.0;
        assert_eq!(adr_crafter_score([100.0; 22].as_ptr(), 22, &mut score), AdrStatus::Ok);
        assert!((score - 100.0).abs() < 1e-9);
        let depths: Vec<u32> = (0..ADR_ACHIEVEMENT_COUNT)
            .map(|i| {
                let mut d = 0;
                assert_eq!(adr_achievement_depth(i, &mut d), AdrStatus::Ok);
                d
            })
            .collect();
        assert_eq!(depths.iter().max(), Some(&8));

        let goals = CString::new("collect wood; place table; eat cow").unwrap();
        let same = CString::new("collect wood; place table; eat cow").unwrap();
        let other = CString::new("sleep").unwrap();
        let mut l = 0.0;
        assert_eq!(adr_text_score(goals.as_ptr(), same.as_ptr(), 256, false, &mut l), AdrStatus::Ok);
        assert!((l - 1.0).abs() < 1e-12);
        assert_eq!(adr_text_score(goals.as_ptr(), other.as_ptr(), 256, true, &mut l), AdrStatus::Ok);
        assert!(l == 0.0 || l == 1.0);
        assert_eq!(adr_text_score(goals.as_ptr(), ptr::null(), 256, false, &mut l), AdrStatus::NullPointer);
    }
}

#[test]
fn policy_handle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.ckpt");
    let dim = 16;
    let params = PolicyParams::new(feature_len(dim), 8, 5);
    save_checkpoint(&path, &params, dim, "fp", 3).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(adr_policy_load(cpath.as_ptr(), &mut p), AdrStatus::Ok);
        let mut n = 0usize;
        assert_eq!(adr_policy_input_dim(p, &mut n), AdrStatus::Ok);
        assert_eq!(n, feature_len(dim));

        let features = vec![0.5f32; n];
        let mut probs = [0.0f64; 17];
        let mut value = 0.0;
        assert_eq!(adr_policy_evaluate(p, features.as_ptr(), n, probs.as_mut_ptr(), &mut value), AdrStatus::Ok);
        let (expected, v) = params.evaluate(&features).unwrap();
        assert_eq!(probs, expected);
        assert_eq!(value, v);
        assert_eq!(adr_policy_evaluate(p, features.as_ptr(), n - 1, probs.as_mut_ptr(), &mut value), AdrStatus::InvalidArgument);

        let w = new_world(4, 16);
        let mut action = 99;
        let goals = CString::new("collect wood").unwrap();
        assert_eq!(adr_policy_act_greedy(p, w, goals.as_ptr(), &mut action), AdrStatus::Ok);
        assert!(action < ADR_ACTION_COUNT);
        assert_eq!(adr_policy_act_greedy(p, w, ptr::null(), &mut action), AdrStatus::Ok);
        adr_world_free(w);
        adr_policy_free(p);

        let missing = CString::new(dir.path().join("nope.ckpt").to_str().unwrap()).unwrap();
        assert_eq!(adr_policy_load(missing.as_ptr(), &mut p), AdrStatus::Io);
        std::fs::write(&path, b"garbage").unwrap();
        assert_eq!(adr_policy_load(cpath.as_ptr(), &mut p), AdrStatus::Incompatible);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/adarefiner.h")).unwrap();
    for name in [
        "adr_last_error",
        "adr_world_new",
        "adr_world_free",
        "adr_world_reset",
        "adr_world_step",
        "adr_world_feasible",
        "adr_world_status",
        "adr_world_unlocked",
        "adr_world_done",
        "adr_world_view",
        "adr_crafter_score",
        "adr_achievement_depth",
        "adr_text_score",
        "adr_policy_load",
        "adr_policy_free",
        "adr_policy_input_dim",
        "adr_policy_evaluate",
        "adr_policy_act_greedy",
        "typedef struct AdrWorld AdrWorld;",
        "ADR_STATUS_EPISODE_DONE = 3",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libadarefiner_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: static library or C compiler unavailable");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke program exited with {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
