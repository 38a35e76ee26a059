//! Adapter feedback: (prompt, completion) pairs for fine-tuning the adapter
//! model, their JSONL export, and the periodic fine-tune hook.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lm::{build_adapter_prompt, AdapterSummary, Backend, PromptError, ReplayBufferView};
use crate::textembed::ComprehensionScore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftPair {
    pub prompt: String,
    pub completion: String,
    pub step: u64,
    #[serde(rename = "l")]
    pub l_value: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum SftError {
    #[error("SFT pair has an empty prompt or completion")]
    Empty,
    #[error("SFT pair has non-finite score {0}")]
    NonFinite(f64),
    #[error("SFT pair at step {got} precedes the last recorded step {last}")]
    OutOfOrder { last: u64, got: u64 },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SftCadence {
    /// One pair per completed generation window.
    #[default]
    PerGeneration,
    /// One pair per environment step, pairing each step with the active summary.
    PerStep,
}

/// The `[sft]` config section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SftConfig {
    pub interval: u64,
    pub cadence: SftCadence,
    /// Called with a JSON body after each snapshot, if set.
    pub hook_url: Option<String>,
    /// Oldest pairs are evicted beyond this many.
    pub capacity: usize,
}

impl Default for SftConfig {
    fn default() -> Self {
        SftConfig { interval: 1000, cadence: SftCadence::PerGeneration, hook_url: None, capacity: 50_000 }
    }
}

impl SftConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.interval == 0 {
            return Err("sft.interval must be at least 1".into());
        }
        if self.capacity == 0 {
            return Err("sft.capacity must be at least 1".into());
        }
        Ok(())
    }
}

/// Append-only pair store with FIFO eviction past `capacity`.
#[derive(Debug, Clone, PartialEq)]
pub struct SftDataset {
    pairs: VecDeque<SftPair>,
    capacity: usize,
    total_recorded: u64,
    /// `total_recorded` at the last snapshot.
    snapshot_mark: u64,
}

impl Default for SftDataset {
    fn default() -> Self {
        Self::with_capacity(SftConfig::default().capacity)
    }
}

impl SftDataset {
    pub fn with_capacity(capacity: usize) -> Self {
        SftDataset { pairs: VecDeque::new(), capacity: capacity.max(1), total_recorded: 0, snapshot_mark: 0 }
    }

    pub fn from_pairs(pairs: Vec<SftPair>) -> Self {
        let mut d = Self::with_capacity(pairs.len().max(1));
        for p in pairs {
            d.pairs.push_back(p);
            d.total_recorded += 1;
        }
        d
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl ExactSizeIterator<Item = &SftPair> {
        self.pairs.iter()
    }

    pub fn total_recorded(&self) -> u64 {
        self.total_recorded
    }

    pub fn push(&mut self, pair: SftPair) -> Result<(), SftError> {
        if pair.prompt.is_empty() || pair.completion.is_empty() {
            return Err(SftError::Empty);
        }
        if !pair.l_value.is_finite() {
            return Err(SftError::NonFinite(pair.l_value));
        }
        if let Some(last) = self.pairs.back() {
            if pair.step < last.step {
                return Err(SftError::OutOfOrder { last: last.step, got: pair.step });
            }
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(pair);
        self.total_recorded += 1;
        Ok(())
    }

    /// Scores of the most recent `n` pairs, oldest first.
    pub fn recent_scores(&self, n: usize) -> Vec<f64> {
        self.pairs.iter().skip(self.pairs.len().saturating_sub(n)).map(|p| p.l_value).collect()
    }

    /// Pairs recorded since the previous call.
    fn take_unsnapshotted(&mut self) -> Vec<&SftPair> {
        let fresh = (self.total_recorded - self.snapshot_mark).min(self.pairs.len() as u64) as usize;
        self.snapshot_mark = self.total_recorded;
        self.pairs.iter().skip(self.pairs.len() - fresh).collect()
    }
}

/// Rebuilds the adapter prompt for `context` with the fresh score `l_new`
/// (omitted when `None`) and pairs it with the summary `c` that was emitted.
pub fn record_sft_pair(
    dataset: &mut SftDataset,
    context: &ReplayBufferView,
    l_new: Option<ComprehensionScore>,
    c: &AdapterSummary,
    t: u64,
) -> Result<(), SftError> {
    let prompt = build_adapter_prompt(context, l_new)?;
    dataset.push(SftPair {
        prompt: format!("{}\n\n{}", prompt.system, prompt.user),
        completion: c.as_str().to_string(),
        step: t,
        l_value: l_new.map_or(0.0, ComprehensionScore::value),
    })
}

pub fn write_sft_jsonl<'a, W: Write>(pairs: impl IntoIterator<Item = &'a SftPair>, mut out: W) -> io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn export_sft_jsonl(dataset: &SftDataset, path: &Path) -> Result<(), SftError> {
    let io_err = |source| SftError::Io { path: path.to_path_buf(), source };
    let f = File::create(path).map_err(io_err)?;
    write_sft_jsonl(dataset.pairs(), BufWriter::new(f)).map_err(io_err)
}

pub fn parse_sft_jsonl(path: &Path) -> Result<Vec<SftPair>, SftError> {
    let f = File::open(path).map_err(|source| SftError::Io { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|source| SftError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let pair = serde_json::from_str(&line).map_err(|e| SftError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(pair);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinetuneOutcome {
    Triggered,
    Skipped,
}

/// Fires when `t` is a positive multiple of `n_sft` and the dataset is
/// non-empty. The scripted adapter re-derives its score bands from the last
/// 100 pairs; every backend gets a `sft-{t}.jsonl` snapshot of the pairs
/// recorded since the previous trigger (when `run_dir` is set) and the
/// optional hook is notified. Hook failures are logged, never fatal.
pub fn maybe_finetune(
    t: u64,
    n_sft: u64,
    adapter: &mut Backend,
    dataset: &mut SftDataset,
    run_dir: Option<&Path>,
    hook_url: Option<&str>,
) -> FinetuneOutcome {
    assert!(n_sft > 0, "n_sft must be positive");
    if t == 0 || !t.is_multiple_of(n_sft) || dataset.is_empty() {
        return FinetuneOutcome::Skipped;
    }
    if let Backend::Scripted(oracle) = adapter {
        oracle.refresh_thresholds(&dataset.recent_scores(100));
    }
    let fresh = dataset.take_unsnapshotted();
    let count = fresh.len();
    let mut snapshot = None;
    if let Some(dir) = run_dir {
        let path = dir.join(format!("sft-{t}.jsonl"));
        let written = File::create(&path).and_then(|f| write_sft_jsonl(fresh, BufWriter::new(f)));
        match written {
            Ok(()) => snapshot = Some(path),
            Err(e) => log::warn!("could not write SFT snapshot {}: {e}", path.display()),
        }
    }
    if let Some(url) = hook_url {
        let body = serde_json::json!({
            "step": t,
            "pairs": count,
            "snapshot": snapshot.as_ref().map(|p| p.display().to_string()),
        });
        if let Err(e) = ureq::post(url).send_json(&body) {
            log::warn!("fine-tune hook {url} failed at step {t}: {e}");
        }
    }
    FinetuneOutcome::Triggered
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::craftworld::PlayerStatus;
    use crate::lm::{ScriptedOracle, SubGoals};

    fn ctx() -> ReplayBufferView {
        ReplayBufferView {
            sees: Some(vec!["grass".into(), "tree".into()]),
            status: Some(PlayerStatus::new(9, 8, 7, 9)),
            past_action: Some("do".into()),
            previous_goals: Some(SubGoals::new(&["collect wood", "place table", "eat cow"]).unwrap()),
            grounding: None,
        }
    }

    fn pair(step: u64, l: f64) -> SftPair {
        SftPair { prompt: format!("p{step}\nline two"), completion: "c".into(), step, l_value: l }
    }

    #[test]
    fn record_uses_fresh_score() {
        let mut d = SftDataset::default();
        let c = AdapterSummary::new("The player is struggling.").unwrap();
        record_sft_pair(&mut d, &ctx(), Some(ComprehensionScore(0.4567)), &c, 20).unwrap();
        assert_eq!(d.len(), 1);
        let p = d.pairs().next().unwrap();
        assert!(p.prompt.contains("Comprehension score: <0.457>"));
        assert_eq!(p.completion, "The player is struggling.");
        record_sft_pair(&mut d, &ctx(), None, &c, 40).unwrap();
        assert!(!d.pairs().nth(1).unwrap().prompt.contains("Comprehension score"));
    }

    #[test]
    fn invariants_are_enforced() {
        let mut d = SftDataset::with_capacity(2);
        d.push(pair(5, 0.1)).unwrap();
        assert!(matches!(d.push(pair(4, 0.1)), Err(SftError::OutOfOrder { .. })));
        assert!(matches!(d.push(pair(6, f64::NAN)), Err(SftError::NonFinite(_))));
        assert!(matches!(d.push(SftPair { completion: String::new(), ..pair(6, 0.0) }), Err(SftError::Empty)));
        d.push(pair(6, 0.2)).unwrap();
        d.push(pair(7, 0.3)).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.pairs().next().unwrap().step, 6);
        assert_eq!(d.total_recorded(), 3);
    }

    #[test]
    fn export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        export_sft_jsonl(&SftDataset::default(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        let d = SftDataset::from_pairs(vec![pair(1, 0.25), pair(2, 0.5)]);
        export_sft_jsonl(&d, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n'));
        assert!(text.contains(r#""l":0.25"#));
        assert_eq!(parse_sft_jsonl(&path).unwrap(), d.pairs().cloned().collect::<Vec<_>>());
    }

    #[test]
    fn finetune_gate() {
        let mut b = Backend::Scripted(ScriptedOracle::default());
        let mut empty = SftDataset::default();
        assert_eq!(maybe_finetune(2000, 1000, &mut b, &mut empty, None, None), FinetuneOutcome::Skipped);
        let mut d = SftDataset::from_pairs((0..30).map(|i| pair(i, i as f64 / 29.0)).collect());
        assert_eq!(maybe_finetune(999, 1000, &mut b, &mut d, None, None), FinetuneOutcome::Skipped);
        assert_eq!(maybe_finetune(0, 1000, &mut b, &mut d, None, None), FinetuneOutcome::Skipped);
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(maybe_finetune(1000, 1000, &mut b, &mut d, Some(dir.path()), None), FinetuneOutcome::Triggered);
        let Backend::Scripted(o) = &b else { unreachable!() };
        assert!((o.thresholds.0 - 1.0 / 3.0).abs() < 1e-9);
        assert_eq!(parse_sft_jsonl(&dir.path().join("sft-1000.jsonl")).unwrap().len(), 30);
        d.push(pair(40, 0.0)).unwrap();
        maybe_finetune(2000, 1000, &mut b, &mut d, Some(dir.path()), None);
        assert_eq!(parse_sft_jsonl(&dir.path().join("sft-2000.jsonl")).unwrap().len(), 1);
    }
}
