use crate::craftworld::{CellKind, Direction, EntityKind, Item, Observation, STAT_MAX, VIEW_COLS, VIEW_ROWS};
use crate::textembed::EmbeddingVector;

/// Per-cell alphabet: one bit per cell kind, one per entity kind, one for void.
pub const CELL_ALPHABET: usize = CellKind::COUNT + EntityKind::COUNT + 1;
pub const VIEW_FEATURES: usize = VIEW_COLS * VIEW_ROWS * CELL_ALPHABET;
const STATUS_FEATURES: usize = 4;
const FACING_FEATURES: usize = Direction::COUNT;

/// Length of the observation part of the feature vector.
pub const OBS_FEATURES: usize = VIEW_FEATURES + STATUS_FEATURES + Item::COUNT + FACING_FEATURES;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("goal embedding has dimension {got}, expected {expected}")]
pub struct DimensionMismatch {
    pub expected: usize,
    pub got: usize,
}

/// Total feature length for a goal-embedding dimension.
pub fn feature_len(embed_dim: usize) -> usize {
    OBS_FEATURES + embed_dim
}

/// Writes the observation block into `out[..OBS_FEATURES]`.
pub fn encode_obs_into(obs: &Observation, out: &mut [f32]) {
    out[..OBS_FEATURES].fill(0.0);
    for (r, row) in obs.local_view.iter().enumerate() {
        for (c, vc) in row.iter().enumerate() {
            let base = (r * VIEW_COLS + c) * CELL_ALPHABET;
            match vc.cell {
                Some(kind) => out[base + kind.index()] = 1.0,
                None => out[base + CELL_ALPHABET - 1] = 1.0,
            }
            if let Some(e) = vc.entity {
                out[base + CellKind::COUNT + e.index()] = 1.0;
            }
        }
    }
    let mut at = VIEW_FEATURES;
    for (_, v) in obs.status.fields() {
        out[at] = v as f32 / STAT_MAX as f32;
        at += 1;
    }
    for item in Item::ALL {
        out[at] = obs.item(*item).clamp(0, STAT_MAX) as f32 / STAT_MAX as f32;
        at += 1;
    }
    out[at + obs.facing.index()] = 1.0;
}

/// L2-normalized goal block; a zero vector stays zero.
pub fn encode_goal_into(goal: &EmbeddingVector, out: &mut [f32]) {
    let norm = goal.norm();
    for (o, &v) in out.iter_mut().zip(&goal.values) {
        *o = if norm > 0.0 { (v / norm) as f32 } else { 0.0 };
    }
}

pub fn encode_observation(obs: &Observation, goal: &EmbeddingVector, embed_dim: usize) -> Result<Vec<f32>, DimensionMismatch> {
    if goal.dim() != embed_dim {
        return Err(DimensionMismatch { expected: embed_dim, got: goal.dim() });
    }
    let mut out = vec![0.0; feature_len(embed_dim)];
    encode_obs_into(obs, &mut out);
    encode_goal_into(goal, &mut out[OBS_FEATURES..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::craftworld::{PlayerStatus, ViewCell};
    use crate::textembed::embed_hashed;

    #[test]
    fn layout_length() {
        assert_eq!(CELL_ALPHABET, 19);
        assert_eq!(feature_len(256), 63 * 19 + 4 + 12 + 4 + 256);
    }

    #[test]
    fn blocks() {
        let mut obs = Observation::void();
        obs.local_view[3][4] = ViewCell { cell: Some(CellKind::Grass), entity: Some(EntityKind::Player) };
        obs.inventory.insert(Item::Wood, 15);
        obs.facing = Direction::Up;
        obs.status = PlayerStatus::FULL;
        let f = encode_observation(&obs, &EmbeddingVector::zeros(8), 8).unwrap();
        let center = (3 * 9 + 4) * CELL_ALPHABET;
        assert_eq!(f[center + CellKind::Grass.index()], 1.0);
        assert_eq!(f[center + CellKind::COUNT + EntityKind::Player.index()], 1.0);
        assert_eq!(f[CELL_ALPHABET - 1], 1.0, "corner is void");
        assert_eq!(&f[VIEW_FEATURES..VIEW_FEATURES + 4], &[1.0; 4]);
        assert_eq!(f[VIEW_FEATURES + 4 + Item::Wood.index()], 1.0, "clipped at 9");
        assert_eq!(f[VIEW_FEATURES + 16 + Direction::Up.index()], 1.0);
        assert!(f[OBS_FEATURES..].iter().all(|&v| v == 0.0));
        // exactly one kind bit per cell, plus the player bit
        assert_eq!(f[..VIEW_FEATURES].iter().sum::<f32>(), 64.0);
    }

    #[test]
    fn goal_block_is_unit_norm() {
        let g = embed_hashed("eat cow; collect wood wood", 32, false);
        let f = encode_observation(&Observation::void(), &g, 32).unwrap();
        let n: f32 = f[OBS_FEATURES..].iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-6);
        assert_eq!(
            encode_observation(&Observation::void(), &g, 16),
            Err(DimensionMismatch { expected: 16, got: 32 })
        );
    }
}
