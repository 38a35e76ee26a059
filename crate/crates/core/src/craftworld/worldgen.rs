//! Seeded terrain generation from layered value noise.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::world::{Creature, EnvConfig};
use super::{CellKind, EntityKind, Pos};

pub(crate) struct Generated {
    pub grid: Vec<CellKind>,
    pub creatures: Vec<Creature>,
    pub spawn: Pos,
}

/// Bilinear value noise in `[0, 1]` on a lattice with the given spacing.
fn value_noise(size: usize, spacing: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let lattice = size / spacing + 2;
    let knots: Vec<f64> = (0..lattice * lattice).map(|_| rng.random::<f64>()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (gx, gy) = (x / spacing, y / spacing);
            let tx = smooth((x % spacing) as f64 / spacing as f64);
            let ty = smooth((y % spacing) as f64 / spacing as f64);
            let k = |i: usize, j: usize| knots[j * lattice + i];
            let top = k(gx, gy) * (1.0 - tx) + k(gx + 1, gy) * tx;
            let bottom = k(gx, gy + 1) * (1.0 - tx) + k(gx + 1, gy + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

fn layered(size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let coarse = value_noise(size, 12, rng);
    let fine = value_noise(size, 5, rng);
    coarse.iter().zip(&fine).map(|(c, f)| 0.7 * c + 0.3 * f).collect()
}

pub(crate) fn generate(config: &EnvConfig, rng: &mut ChaCha8Rng) -> Generated {
    let size = config.size;
    let elevation = layered(size, rng);
    let moisture = layered(size, rng);
    let tunnels = layered(size, rng);
    let spawn = Pos::new(size as i32 / 2, size as i32 / 2);

    let mut grid = vec![CellKind::Grass; size * size];
    let mut creatures = Vec::new();
    let mut tunnel_cells = Vec::new();

    for y in 0..size {
        for x in 0..size {
            let i = y * size + x;
            let p = Pos::new(x as i32, y as i32);
            // Flatten the terrain around the spawn point so every episode starts on grass.
            let d = ((p.x - spawn.x).pow(2) + (p.y - spawn.y).pow(2)) as f64;
            let calm = (1.0 - d.sqrt() / 6.0).max(0.0);
            let e = elevation[i] * (1.0 - calm) + 0.5 * calm;
            let m = moisture[i];
            let t = tunnels[i];

            grid[i] = if e < 0.36 && m > 0.35 {
                CellKind::Water
            } else if e < 0.40 && m > 0.3 {
                CellKind::Sand
            } else if e > 0.60 {
                if t > 0.62 && e > 0.66 {
                    tunnel_cells.push(p);
                    if t > 0.72 && e > 0.70 {
                        CellKind::Lava
                    } else {
                        CellKind::Path
                    }
                } else {
                    let r: f64 = rng.random();
                    let diamond = config.diamond_density;
                    let iron = diamond + config.iron_density;
                    let coal = iron + config.coal_density;
                    if r < diamond {
                        CellKind::DiamondOre
                    } else if r < iron {
                        CellKind::IronOre
                    } else if r < coal {
                        CellKind::CoalOre
                    } else {
                        CellKind::Stone
                    }
                }
            } else if p != spawn && rng.random_bool(config.tree_density * (0.5 + m).min(1.5)) {
                CellKind::Tree
            } else {
                CellKind::Grass
            };
        }
    }

    for y in 0..size {
        for x in 0..size {
            let p = Pos::new(x as i32, y as i32);
            if p == spawn || grid[y * size + x] != CellKind::Grass {
                continue;
            }
            if rng.random_bool(config.cow_density) {
                creatures.push(Creature {
                    kind: EntityKind::Cow,
                    pos: p,
                    health: config.cow_health,
                    cooldown: 0,
                });
            }
        }
    }
    for p in tunnel_cells {
        let kind = grid[p.y as usize * size + p.x as usize];
        if kind == CellKind::Path && rng.random_bool(config.skeleton_density) {
            creatures.push(Creature {
                kind: EntityKind::Skeleton,
                pos: p,
                health: config.skeleton_health,
                cooldown: config.skeleton_reload,
            });
        }
    }

    Generated { grid, creatures, spawn }
}
