//! Success rates, the aggregate score, evaluation runs, and CSV curves.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::craftworld::{achievement_depth, Achievement, Action, WorldState};
use crate::orchestrator::{derive_seed, GoalDriver, RunError};
use crate::policy::{encode_goal_into, encode_obs_into, CheckpointHeader, PolicyParams, ACTION_COUNT, OBS_FEATURES};

/// Trailing window (in episodes or score samples) for smoothed curves.
pub const CURVE_WINDOW: usize = 100;

/// One finished episode, as written to `episodes.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeLog {
    pub episode: u64,
    pub seed: u64,
    /// Global step at which the episode ended (its own length during evaluation).
    pub end_step: u64,
    pub length: u64,
    #[serde(rename = "return")]
    pub episode_return: f64,
    /// Achievements in unlock order.
    pub unlocks: Vec<Achievement>,
    pub impossible_actions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub episodes: u64,
    /// Percent of episodes with at least one unlock, keyed by display name.
    pub success_rates: BTreeMap<String, f64>,
    pub score: f64,
    pub mean_reward: f64,
    /// Standard deviation of episode returns.
    pub reward_std: f64,
    pub achievements_completed: usize,
    pub max_depth_completed: u32,
    pub impossible_action_rate: f64,
    pub mean_length: f64,
    pub episode_returns: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no episodes to evaluate")]
    NoEpisodes,
    #[error("expected {expected} success rates, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error("success rate {value} for {name} lies outside [0, 100]")]
    RateRange { name: String, value: f64 },
    #[error("missing input {0}")]
    Missing(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

/// Percent of episodes in which each achievement was unlocked at least once,
/// in `Achievement::ALL` order.
pub fn success_rates(logs: &[EpisodeLog]) -> Result<Vec<f64>, EvalError> {
    if logs.is_empty() {
        return Err(EvalError::NoEpisodes);
    }
    let mut hits = [0u64; Achievement::COUNT];
    for log in logs {
        let mut seen = [false; Achievement::COUNT];
        for a in &log.unlocks {
            seen[a.index()] = true;
        }
        for (h, s) in hits.iter_mut().zip(seen) {
            *h += s as u64;
        }
    }
    Ok(hits.iter().map(|&h| 100.0 * h as f64 / logs.len() as f64).collect())
}

/// `exp(mean ln(1 + s_i)) - 1` over the 22 rates (percent).
pub fn crafter_score(rates: &[f64]) -> Result<f64, EvalError> {
    if rates.len() != Achievement::COUNT {
        return Err(EvalError::RateCount { expected: Achievement::COUNT, got: rates.len() });
    }
    for (a, &s) in Achievement::ALL.iter().zip(rates) {
        if !(0.0..=100.0).contains(&s) {
            return Err(EvalError::RateRange { name: a.name().to_string(), value: s });
        }
    }
    let mean_log = rates.iter().map(|s| s.ln_1p()).sum::<f64>() / rates.len() as f64;
    Ok(mean_log.exp() - 1.0)
}

/// [`crafter_score`] over a name-keyed map, which must hold every achievement.
pub fn crafter_score_map(rates: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    if rates.len() != Achievement::COUNT {
        return Err(EvalError::RateCount { expected: Achievement::COUNT, got: rates.len() });
    }
    let ordered = Achievement::ALL
        .iter()
        .map(|a| rates.get(a.name()).copied().ok_or(EvalError::RateCount { expected: Achievement::COUNT, got: rates.len() }))
        .collect::<Result<Vec<_>, _>>()?;
    crafter_score(&ordered)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

pub fn report_from_logs(logs: &[EpisodeLog]) -> Result<EvalReport, EvalError> {
    let rates = success_rates(logs)?;
    let returns: Vec<f64> = logs.iter().map(|l| l.episode_return).collect();
    let (mean_reward, reward_std) = mean_std(&returns);
    let steps: u64 = logs.iter().map(|l| l.length).sum();
    let impossible: u64 = logs.iter().map(|l| l.impossible_actions).sum();
    let completed: Vec<Achievement> = Achievement::ALL.iter().copied().filter(|a| rates[a.index()] > 0.0).collect();
    Ok(EvalReport {
        episodes: logs.len() as u64,
        score: crafter_score(&rates)?,
        success_rates: Achievement::ALL.iter().map(|a| (a.name().to_string(), rates[a.index()])).collect(),
        mean_reward,
        reward_std,
        achievements_completed: completed.len(),
        max_depth_completed: completed.iter().map(|&a| achievement_depth(a)).max().unwrap_or(0),
        impossible_action_rate: if steps == 0 { 0.0 } else { impossible as f64 / steps as f64 },
        mean_length: steps as f64 / logs.len() as f64,
        episode_returns: returns,
    })
}

/// Standard deviation of mean reward across per-seed reports.
pub fn seed_reward_std(reports: &[EvalReport]) -> f64 {
    mean_std(&reports.iter().map(|r| r.mean_reward).collect::<Vec<_>>()).1
}

const EVAL_STREAM: u64 = 0xE7A1;

/// Runs `episodes` episodes with seeds `base_seed, base_seed + 1, ...`,
/// querying the configured backends on the usual schedule.
pub fn evaluate(
    params: &PolicyParams,
    header: Option<&CheckpointHeader>,
    config: &RunConfig,
    episodes: u64,
) -> Result<EvalReport, RunError> {
    if let Some(h) = header {
        h.check_compatible(config.embed.dimension, &config.fingerprint())?;
    }
    if params.input_dim() != config.feature_len() {
        return Err(RunError::Invalid(format!(
            "policy expects {} features, config produces {}",
            params.input_dim(),
            config.feature_len()
        )));
    }
    let mut features = vec![0.0f32; config.feature_len()];
    let mut logs = Vec::with_capacity(episodes as usize);
    for e in 0..episodes {
        let seed = config.eval.base_seed + e;
        let mut world = WorldState::new(config.env.clone(), seed);
        let mut obs = world.observation();
        let mut driver = GoalDriver::new(config, derive_seed(seed, EVAL_STREAM, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, EVAL_STREAM, 0));
        let mut log = EpisodeLog { episode: e, seed, end_step: 0, length: 0, episode_return: 0.0, unlocks: vec![], impossible_actions: 0 };
        let mut t = 0;
        while !world.done() {
            driver.before_step(t, &world, &obs, None)?;
            encode_obs_into(&obs, &mut features);
            encode_goal_into(driver.goal_embedding(), &mut features[OBS_FEATURES..]);
            let out = if config.eval.greedy { params.act_greedy(&features)? } else { params.act(&features, &mut rng)? };
            if !world.feasible(out.action) {
                log.impossible_actions += 1;
            }
            let result = world.step(out.action)?;
            driver.after_step(t, out.action, &obs, &result, None)?;
            log.episode_return += result.reward;
            log.unlocks.extend(result.unlocks.iter().copied());
            obs = result.observation;
            t += 1;
        }
        log.length = t;
        log.end_step = t;
        logs.push(log);
    }
    Ok(report_from_logs(&logs)?)
}

/// Uniformly random actions over the same seeds as [`evaluate`].
pub fn evaluate_random(config: &RunConfig, episodes: u64) -> Result<EvalReport, RunError> {
    let mut logs = Vec::with_capacity(episodes as usize);
    for e in 0..episodes {
        let seed = config.eval.base_seed + e;
        let mut world = WorldState::new(config.env.clone(), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, EVAL_STREAM, 2));
        let mut log = EpisodeLog { episode: e, seed, end_step: 0, length: 0, episode_return: 0.0, unlocks: vec![], impossible_actions: 0 };
        while !world.done() {
            let action = Action::ALL[rng.random_range(0..Action::COUNT)];
            if !world.feasible(action) {
                log.impossible_actions += 1;
            }
            let result = world.step(action)?;
            log.episode_return += result.reward;
            log.unlocks.extend(result.unlocks.iter().copied());
            log.length += 1;
        }
        log.end_step = log.length;
        logs.push(log);
    }
    Ok(report_from_logs(&logs)?)
}

/// Formats with 6 significant digits, like C's `%.6g`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..6).contains(&exp) {
        trim(format!("{:.*}", (5 - exp) as usize, x))
    } else {
        let (mantissa, e) = sci.split_at(sci.find('e').unwrap());
        format!("{}{}", trim(mantissa.to_string()), e)
    }
}

/// Trailing-window means: entry i averages `xs[i+1-window..=i]`.
pub fn windowed_mean(xs: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (average ranks for ties). `NaN` when either
/// series is constant or shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, sx) = mean_std(&rx);
    let (my, sy) = mean_std(&ry);
    let cov = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    cov / (sx * sy)
}

/// One parsed row of `steps.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub step: u64,
    pub episode: u64,
    pub reward: f64,
    pub episode_return: f64,
    pub done: bool,
    pub l: Option<f64>,
}

pub const STEPS_HEADER: &str =
    "step,episode,reward,episode_return,done,l,generation,adapter_calls,decision_calls,dropped_queries,sft_pairs,sft_triggers,ppo_updates";

pub fn read_steps_csv(path: &Path) -> Result<Vec<StepRow>, EvalError> {
    if !path.exists() {
        return Err(EvalError::Missing(path.to_path_buf()));
    }
    let io_err = |source| EvalError::Io { path: path.to_path_buf(), source };
    let f = File::open(path).map_err(io_err)?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let bad = |message: String| EvalError::Parse { path: path.to_path_buf(), line: i + 1, message };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 6 {
            return Err(bad(format!("expected at least 6 columns, got {}", cols.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("`{s}`: {e}")));
        rows.push(StepRow {
            step: int(cols[0])?,
            episode: int(cols[1])?,
            reward: num(cols[2])?,
            episode_return: num(cols[3])?,
            done: cols[4] == "1",
            l: if cols[5].is_empty() { None } else { Some(num(cols[5])?) },
        });
    }
    Ok(rows)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EvalError> {
    let f = File::open(path).map_err(|source| EvalError::Io { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_episode_logs(path: &Path) -> Result<Vec<EpisodeLog>, EvalError> {
    read_jsonl(path)
}

/// Action distribution recorded during training, one line of `policy-frames.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFrame {
    pub step: u64,
    pub probs: Vec<f64>,
}

struct CsvOut {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvOut {
    fn create(path: PathBuf, header: &str) -> Result<Self, EvalError> {
        let f = File::create(&path).map_err(|source| EvalError::Io { path: path.clone(), source })?;
        let mut c = CsvOut { path, out: BufWriter::new(f) };
        c.line(header)?;
        Ok(c)
    }

    fn line(&mut self, s: &str) -> Result<(), EvalError> {
        writeln!(self.out, "{s}").map_err(|source| EvalError::Io { path: self.path.clone(), source })
    }

    fn finish(mut self) -> Result<PathBuf, EvalError> {
        self.out.flush().map_err(|source| EvalError::Io { path: self.path.clone(), source })?;
        Ok(self.path)
    }
}

/// Writes learning_curve.csv, comprehension_curve.csv, success_rates.csv and
/// policy_probs.csv into `out_dir` from the artifacts of `run_dir`.
pub fn emit_curves(run_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let rows = read_steps_csv(&run_dir.join("steps.csv"))?;
    std::fs::create_dir_all(out_dir).map_err(|source| EvalError::Io { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::new();

    let mut c = CsvOut::create(out_dir.join("learning_curve.csv"), "step,episode,return,mean_return")?;
    let finished: Vec<&StepRow> = rows.iter().filter(|r| r.done).collect();
    let returns: Vec<f64> = finished.iter().map(|r| r.episode_return).collect();
    for (r, m) in finished.iter().zip(windowed_mean(&returns, CURVE_WINDOW)) {
        c.line(&format!("{},{},{},{}", r.step, r.episode, fmt_sig(r.episode_return), fmt_sig(m)))?;
    }
    written.push(c.finish()?);

    let mut c = CsvOut::create(out_dir.join("comprehension_curve.csv"), "step,l,mean_l")?;
    let scored: Vec<(u64, f64)> = rows.iter().filter_map(|r| r.l.map(|l| (r.step, l))).collect();
    let ls: Vec<f64> = scored.iter().map(|s| s.1).collect();
    for ((step, l), m) in scored.iter().zip(windowed_mean(&ls, CURVE_WINDOW)) {
        c.line(&format!("{step},{},{}", fmt_sig(*l), fmt_sig(m)))?;
    }
    written.push(c.finish()?);

    let report_path = run_dir.join("eval-report.json");
    let episodes_path = run_dir.join("episodes.jsonl");
    let rates: Option<Vec<f64>> = if report_path.exists() {
        let text = std::fs::read_to_string(&report_path).map_err(|source| EvalError::Io { path: report_path.clone(), source })?;
        let report: EvalReport = serde_json::from_str(&text).map_err(|e| EvalError::Parse { path: report_path.clone(), line: 0, message: e.to_string() })?;
        Some(Achievement::ALL.iter().map(|a| report.success_rates.get(a.name()).copied().unwrap_or(0.0)).collect())
    } else if episodes_path.exists() {
        let logs = read_episode_logs(&episodes_path)?;
        if logs.is_empty() { None } else { Some(success_rates(&logs)?) }
    } else {
        None
    };
    let mut c = CsvOut::create(out_dir.join("success_rates.csv"), "achievement,success_rate,log10_1p")?;
    for (a, s) in Achievement::ALL.iter().zip(rates.iter().flatten()) {
        c.line(&format!("{},{},{}", a.name(), fmt_sig(*s), fmt_sig((1.0 + s).log10())))?;
    }
    written.push(c.finish()?);

    let names: Vec<&str> = Action::ALL.iter().map(|a| a.name()).collect();
    let mut c = CsvOut::create(out_dir.join("policy_probs.csv"), &format!("step,{}", names.join(",")))?;
    let frames_path = run_dir.join("policy-frames.jsonl");
    if frames_path.exists() {
        for f in read_jsonl::<PolicyFrame>(&frames_path)? {
            if f.probs.len() != ACTION_COUNT {
                return Err(EvalError::Parse { path: frames_path.clone(), line: 0, message: format!("frame at step {} has {} probabilities", f.step, f.probs.len()) });
            }
            let cols: Vec<String> = f.probs.iter().map(|&p| fmt_sig(p)).collect();
            c.line(&format!("{},{}", f.step, cols.join(",")))?;
        }
    }
    written.push(c.finish()?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log(unlocks: &[Achievement], ret: f64) -> EpisodeLog {
        EpisodeLog { episode: 0, seed: 0, end_step: 10, length: 10, episode_return: ret, unlocks: unlocks.to_vec(), impossible_actions: 2 }
    }

    #[test]
    fn rates_count_episodes_not_unlocks() {
        let mut logs: Vec<EpisodeLog> = (0..250).map(|_| log(&[Achievement::CollectWood], 1.0)).collect();
        logs.extend((0..250).map(|_| log(&[], 0.0)));
        logs[0].unlocks.push(Achievement::CollectWood);
        let r = success_rates(&logs).unwrap();
        assert_eq!(r[Achievement::CollectWood.index()], 50.0);
        assert_eq!(r[Achievement::CollectDiamond.index()], 0.0);
        assert!(matches!(success_rates(&[]), Err(EvalError::NoEpisodes)));
    }

    #[test]
    fn score_examples() {
        assert_eq!(crafter_score(&[0.0; 22]).unwrap(), 0.0);
        assert!((crafter_score(&[100.0; 22]).unwrap() - 100.0).abs() < 1e-12);
        let mut one = [0.0; 22];
        one[3] = 100.0;
        assert!((crafter_score(&one).unwrap() - 0.23340).abs() < 5e-6);
        assert!(crafter_score(&[0.0; 21]).is_err());
        let mut bad = [0.0; 22];
        bad[0] = 100.5;
        assert!(crafter_score(&bad).is_err());
    }

    proptest! {
        #[test]
        fn score_is_monotone_and_bounded(mut r in proptest::collection::vec(0.0f64..=100.0, 22), i in 0usize..22, bump in 0.0f64..50.0) {
            let s = crafter_score(&r).unwrap();
            prop_assert!((0.0..=100.0 + 1e-9).contains(&s));
            r[i] = (r[i] + bump).min(100.0);
            prop_assert!(crafter_score(&r).unwrap() >= s - 1e-12);
        }

        #[test]
        fn rates_ignore_episode_order(mask in proptest::collection::vec(0u32..(1 << 22), 1..40)) {
            let logs: Vec<EpisodeLog> = mask.iter().map(|m| {
                let u: Vec<Achievement> = Achievement::ALL.iter().copied().filter(|a| m & (1 << a.index()) != 0).collect();
                log(&u, 0.0)
            }).collect();
            let mut rev = logs.clone();
            rev.reverse();
            let r = success_rates(&logs).unwrap();
            prop_assert_eq!(&r, &success_rates(&rev).unwrap());
            prop_assert!(r.iter().all(|s| (0.0..=100.0).contains(s)));
        }
    }

    #[test]
    fn report_fields() {
        let logs = vec![log(&[Achievement::MakeIronPickaxe, Achievement::CollectWood], 2.0), log(&[], 0.0)];
        let r = report_from_logs(&logs).unwrap();
        assert_eq!(r.success_rates.len(), 22);
        assert_eq!(r.achievements_completed, 2);
        assert_eq!(r.max_depth_completed, 7);
        assert_eq!(r.mean_reward, 1.0);
        assert_eq!(r.reward_std, 1.0);
        assert_eq!(r.impossible_action_rate, 0.2);
        assert!((crafter_score_map(&r.success_rates).unwrap() - r.score).abs() < 1e-15);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.233404), "0.233404");
        assert_eq!(fmt_sig(2.0 / 3.0), "0.666667");
        assert_eq!(fmt_sig(123456789.0), "1.23457e8");
        assert_eq!(fmt_sig(-0.000012345678), "-1.23457e-5");
        assert_eq!(fmt_sig(999999.7), "1e6");
        assert_eq!(fmt_sig(12.5), "12.5");
    }

    #[test]
    fn windowed_means_and_ranks() {
        assert_eq!(windowed_mean(&[3.0; 5], 2), vec![3.0; 5]);
        assert_eq!(windowed_mean(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.0, 1.5, 2.5, 3.5]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 15.0]) - 0.5).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]) - 1.0).abs() < 1e-12);
        assert!(spearman(&[1.0, 2.0], &[5.0, 5.0]).is_nan());
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn curves_from_minimal_run() {
        let run = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        assert!(matches!(emit_curves(run.path(), out.path()), Err(EvalError::Missing(_))));
        std::fs::write(run.path().join("steps.csv"), format!("{STEPS_HEADER}\n")).unwrap();
        let files = emit_curves(run.path(), out.path()).unwrap();
        assert_eq!(files.len(), 4);
        for f in &files {
            assert_eq!(std::fs::read_to_string(f).unwrap().lines().count(), 1, "{}", f.display());
        }
        let body = "0,0,0,0,0,0.5,1,0,1,0,0,0,0\n1,0,2,2,1,,0,0,1,0,0,0,0\n2,1,2,2,1,,0,0,1,0,0,0,0\n";
        std::fs::write(run.path().join("steps.csv"), format!("{STEPS_HEADER}\n{body}")).unwrap();
        emit_curves(run.path(), out.path()).unwrap();
        let lc = std::fs::read_to_string(out.path().join("learning_curve.csv")).unwrap();
        assert_eq!(lc, "step,episode,return,mean_return\n1,0,2,2\n2,1,2,2\n");
        let cc = std::fs::read_to_string(out.path().join("comprehension_curve.csv")).unwrap();
        assert_eq!(cc, "step,l,mean_l\n0,0.5,0.5\n");
    }
}
