use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::worldgen;
use super::{
    step_reward, Achievement, Action, CellKind, Direction, EntityKind, Event, Inventory, Item,
    Observation, PlayerStatus, Pos, StepResult, ViewCell, STAT_MAX, VIEW_COLS, VIEW_ROWS,
};

/// Simulator constants. Every value is overridable from the `[env]` config section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Side length of the square map.
    pub size: usize,
    pub episode_cap: u64,
    pub day_length: u64,
    /// Daylight phase below which it is night.
    pub night_threshold: f64,
    /// Fraction of grass cells holding a tree.
    pub tree_density: f64,
    /// Fractions of stone cells holding ore.
    pub coal_density: f64,
    pub iron_density: f64,
    pub diamond_density: f64,
    pub cow_density: f64,
    /// Fraction of tunnel cells holding a skeleton at generation time.
    pub skeleton_density: f64,
    pub food_decay: u32,
    pub drink_decay: u32,
    pub energy_decay: u32,
    /// Ticks per health point lost for each depleted stat.
    pub starve_interval: u32,
    /// Ticks per health point regained while no stat is depleted.
    pub regen_interval: u32,
    pub cow_food: i32,
    pub plant_food: i32,
    pub cow_health: i32,
    pub zombie_health: i32,
    pub skeleton_health: i32,
    pub zombie_damage: i32,
    pub arrow_damage: i32,
    pub zombie_cooldown: u32,
    pub skeleton_reload: u32,
    pub sapling_chance: f64,
    pub plant_ripe_ticks: u32,
    pub zombie_spawn_prob: f64,
    pub skeleton_spawn_prob: f64,
    pub cow_spawn_prob: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            size: 64,
            episode_cap: 10_000,
            day_length: 300,
            night_threshold: 0.3,
            tree_density: 0.06,
            coal_density: 0.02,
            iron_density: 0.01,
            diamond_density: 0.003,
            cow_density: 0.015,
            skeleton_density: 0.05,
            food_decay: 25,
            drink_decay: 20,
            energy_decay: 30,
            starve_interval: 10,
            regen_interval: 30,
            cow_food: 4,
            plant_food: 4,
            cow_health: 3,
            zombie_health: 5,
            skeleton_health: 3,
            zombie_damage: 2,
            arrow_damage: 1,
            zombie_cooldown: 5,
            skeleton_reload: 4,
            sapling_chance: 0.1,
            plant_ripe_ticks: 200,
            zombie_spawn_prob: 0.05,
            skeleton_spawn_prob: 0.02,
            cow_spawn_prob: 0.01,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.size < VIEW_COLS {
            return Err(format!("env.size must be at least {VIEW_COLS}"));
        }
        if self.episode_cap == 0 || self.day_length == 0 {
            return Err("env.episode_cap and env.day_length must be positive".into());
        }
        let rates = [
            self.food_decay,
            self.drink_decay,
            self.energy_decay,
            self.starve_interval,
            self.regen_interval,
        ];
        if rates.contains(&0) {
            return Err("env decay/regen intervals must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorldError {
    #[error("step called on a finished episode")]
    EpisodeDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct Creature {
    pub kind: EntityKind,
    pub pos: Pos,
    pub health: i32,
    pub cooldown: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct LifeCounters {
    hunger: u32,
    thirst: u32,
    fatigue: u32,
    starve: u32,
    regen: u32,
}

/// JSON maps need string keys, so the plant map is stored as a pair list.
mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::Pos;

    pub fn serialize<S: Serializer>(map: &BTreeMap<Pos, u32>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Pos, u32>, D::Error> {
        Ok(Vec::<(Pos, u32)>::deserialize(d)?.into_iter().collect())
    }
}

/// Full simulator state. Single owner, mutated in place by [`WorldState::step`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldState {
    config: EnvConfig,
    grid: Vec<CellKind>,
    entities: Vec<Creature>,
    #[serde(with = "pairs")]
    plants: BTreeMap<Pos, u32>,
    player_pos: Pos,
    player_facing: Direction,
    inventory: Inventory,
    status: PlayerStatus,
    unlocked: BTreeSet<Achievement>,
    tick: u64,
    sleeping: bool,
    done: bool,
    counters: LifeCounters,
    rng: ChaCha8Rng,
}

impl WorldState {
    /// Generates a fresh world for `seed`.
    pub fn new(config: EnvConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let generated = worldgen::generate(&config, &mut rng);
        WorldState {
            config,
            grid: generated.grid,
            entities: generated.creatures,
            plants: BTreeMap::new(),
            player_pos: generated.spawn,
            player_facing: Direction::Down,
            inventory: Inventory::new(),
            status: PlayerStatus::FULL,
            unlocked: BTreeSet::new(),
            tick: 0,
            sleeping: false,
            done: false,
            counters: LifeCounters::default(),
            rng,
        }
    }

    /// Replaces this world with a freshly generated one and returns its first observation.
    pub fn reset(&mut self, seed: u64) -> Observation {
        *self = WorldState::new(self.config.clone(), seed);
        self.observation()
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn size(&self) -> i32 {
        self.config.size as i32
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn done(&self) -> bool {
        self.done
    }

    pub fn status(&self) -> PlayerStatus {
        self.status
    }

    pub fn inventory(&self) -> &Inventory {
        &self.inventory
    }

    pub fn unlocked(&self) -> &BTreeSet<Achievement> {
        &self.unlocked
    }

    pub fn player_pos(&self) -> Pos {
        self.player_pos
    }

    pub fn facing(&self) -> Direction {
        self.player_facing
    }

    pub fn sleeping(&self) -> bool {
        self.sleeping
    }

    /// Daylight phase in `[0, 1)`. Episodes start at the end of the night
    /// threshold, so the first `(1 - threshold) * day_length` ticks are day.
    pub fn daylight(&self) -> f64 {
        let len = self.config.day_length;
        let offset = (self.config.night_threshold * len as f64).round() as u64;
        ((self.tick + offset) % len) as f64 / len as f64
    }

    pub fn is_night(&self) -> bool {
        self.daylight() < self.config.night_threshold
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        let n = self.size();
        p.x >= 0 && p.y >= 0 && p.x < n && p.y < n
    }

    pub fn cell(&self, p: Pos) -> Option<CellKind> {
        self.in_bounds(p).then(|| self.grid[self.index(p)])
    }

    pub fn grid(&self) -> &[CellKind] {
        &self.grid
    }

    /// `(kind, position, health)` for every creature on the map.
    pub fn entities(&self) -> Vec<(EntityKind, Pos, i32)> {
        self.entities.iter().map(|c| (c.kind, c.pos, c.health)).collect()
    }

    pub fn item(&self, item: Item) -> i32 {
        self.inventory.get(&item).copied().unwrap_or(0)
    }

    /// Overwrites a cell. Meant for building test scenarios.
    pub fn set_cell(&mut self, p: Pos, kind: CellKind) {
        let i = self.index(p);
        self.grid[i] = kind;
        if kind != CellKind::Plant {
            self.plants.remove(&p);
        } else {
            self.plants.entry(p).or_insert(0);
        }
    }

    /// Sets an inventory count (clamped to `[0, 9]`). Meant for test scenarios.
    pub fn set_item(&mut self, item: Item, count: i32) {
        self.inventory.insert(item, count.clamp(0, STAT_MAX));
    }

    /// Overwrites the status (clamped). Meant for test scenarios.
    pub fn set_status(&mut self, status: PlayerStatus) {
        self.status = status;
        self.status.clamp();
    }

    /// Moves the player and sets its facing. Meant for test scenarios.
    pub fn place_player(&mut self, p: Pos, facing: Direction) {
        assert!(self.in_bounds(p));
        self.entities.retain(|c| c.pos != p);
        self.player_pos = p;
        self.player_facing = facing;
    }

    /// Puts a creature on `p`, replacing any existing one. Meant for test scenarios.
    pub fn spawn_creature(&mut self, kind: EntityKind, p: Pos) {
        assert!(kind != EntityKind::Player && p != self.player_pos);
        let health = self.creature_health(kind);
        self.entities.retain(|c| c.pos != p);
        self.entities.push(Creature { kind, pos: p, health, cooldown: 0 });
    }

    /// Removes every creature. Meant for test scenarios.
    pub fn clear_creatures(&mut self) {
        self.entities.clear();
    }

    /// 64-bit FNV-1a digest of the complete state, including the RNG.
    pub fn state_hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("world state serializes");
        crate::textembed::fnv1a64(&bytes)
    }

    pub fn observation(&self) -> Observation {
        let mut view = [[ViewCell::VOID; VIEW_COLS]; VIEW_ROWS];
        let cx = Observation::CENTER_COL as i32;
        let cy = Observation::CENTER_ROW as i32;
        for (row, line) in view.iter_mut().enumerate() {
            for (col, slot) in line.iter_mut().enumerate() {
                let p = self.player_pos.offset(col as i32 - cx, row as i32 - cy);
                if let Some(cell) = self.cell(p) {
                    let entity = if p == self.player_pos {
                        Some(EntityKind::Player)
                    } else {
                        self.creature_at(p).map(|i| self.entities[i].kind)
                    };
                    *slot = ViewCell { cell: Some(cell), entity };
                }
            }
        }
        Observation {
            local_view: view,
            status: self.status,
            inventory: self.inventory.clone(),
            facing: self.player_facing,
        }
    }

    /// Whether `action` would change the world right now.
    pub fn feasible(&self, action: Action) -> bool {
        if self.done {
            return false;
        }
        if self.sleeping {
            return action == Action::Noop;
        }
        let target = self.facing_pos();
        match action {
            Action::Noop => true,
            Action::MoveLeft | Action::MoveRight | Action::MoveUp | Action::MoveDown => {
                let dir = action.direction().expect("movement action");
                let (dx, dy) = dir.delta();
                dir != self.player_facing || self.player_can_enter(self.player_pos.offset(dx, dy))
            }
            Action::Do => {
                if self.creature_at(target).is_some() {
                    return true;
                }
                match self.cell(target) {
                    Some(CellKind::Tree | CellKind::Grass | CellKind::Water) => true,
                    Some(CellKind::Stone | CellKind::PlacedStone | CellKind::CoalOre) => {
                        self.item(Item::WoodPickaxe) > 0
                    }
                    Some(CellKind::IronOre) => self.item(Item::StonePickaxe) > 0,
                    Some(CellKind::DiamondOre) => self.item(Item::IronPickaxe) > 0,
                    Some(CellKind::Plant) => self.plant_ripe(target),
                    _ => false,
                }
            }
            Action::Sleep => self.status.energy < STAT_MAX,
            Action::PlaceStone => {
                self.item(Item::Stone) > 0
                    && self.placeable(
                        target,
                        &[CellKind::Grass, CellKind::Sand, CellKind::Path, CellKind::Water, CellKind::Lava],
                    )
            }
            Action::PlaceTable => {
                self.item(Item::Wood) > 0
                    && self.placeable(target, &[CellKind::Grass, CellKind::Sand, CellKind::Path])
            }
            Action::PlaceFurnace => {
                self.item(Item::Stone) > 0
                    && self.placeable(target, &[CellKind::Grass, CellKind::Sand, CellKind::Path])
            }
            Action::PlacePlant => {
                self.item(Item::Sapling) > 0 && self.placeable(target, &[CellKind::Grass])
            }
            Action::MakeWoodPickaxe | Action::MakeWoodSword => {
                self.near(CellKind::Table) && self.item(Item::Wood) >= 1
            }
            Action::MakeStonePickaxe | Action::MakeStoneSword => {
                self.near(CellKind::Table) && self.item(Item::Wood) >= 1 && self.item(Item::Stone) >= 1
            }
            Action::MakeIronPickaxe | Action::MakeIronSword => {
                self.near(CellKind::Table)
                    && self.near(CellKind::Furnace)
                    && self.item(Item::Wood) >= 1
                    && self.item(Item::Coal) >= 1
                    && self.item(Item::Iron) >= 1
            }
        }
    }

    /// Advances the world by one tick.
    pub fn step(&mut self, action: Action) -> Result<StepResult, WorldError> {
        if self.done {
            return Err(WorldError::EpisodeDone);
        }
        let health_before = self.status.health;
        let mut events = Vec::new();
        let mut unlocks = Vec::new();

        if !self.sleeping && self.feasible(action) {
            self.apply_action(action, &mut events, &mut unlocks);
        }
        self.grow_plants();
        self.update_creatures(&mut events);
        self.spawn_and_despawn();
        self.update_life(&mut events, &mut unlocks);
        if self.cell(self.player_pos) == Some(CellKind::Lava) && self.status.health > 0 {
            let delta = -self.status.health;
            self.status.health = 0;
            events.push(Event { name: "lava".into(), unlocks: vec![], health_delta: delta });
        }
        self.status.clamp();
        self.tick += 1;
        self.done = self.status.health <= 0 || self.tick >= self.config.episode_cap;

        let health_delta = self.status.health - health_before;
        Ok(StepResult {
            observation: self.observation(),
            reward: step_reward(unlocks.len(), health_delta),
            done: self.done,
            unlocks,
            health_delta,
            events,
        })
    }

    fn index(&self, p: Pos) -> usize {
        p.y as usize * self.config.size + p.x as usize
    }

    fn facing_pos(&self) -> Pos {
        let (dx, dy) = self.player_facing.delta();
        self.player_pos.offset(dx, dy)
    }

    fn creature_at(&self, p: Pos) -> Option<usize> {
        self.entities.iter().position(|c| c.pos == p)
    }

    fn creature_health(&self, kind: EntityKind) -> i32 {
        match kind {
            EntityKind::Cow => self.config.cow_health,
            EntityKind::Zombie => self.config.zombie_health,
            EntityKind::Skeleton => self.config.skeleton_health,
            EntityKind::Player => STAT_MAX,
        }
    }

    fn player_can_enter(&self, p: Pos) -> bool {
        self.cell(p).is_some_and(CellKind::walkable) && self.creature_at(p).is_none()
    }

    fn creature_can_enter(&self, p: Pos, allowed: fn(CellKind) -> bool) -> bool {
        self.cell(p).is_some_and(allowed) && p != self.player_pos && self.creature_at(p).is_none()
    }

    fn placeable(&self, p: Pos, onto: &[CellKind]) -> bool {
        self.cell(p).is_some_and(|c| onto.contains(&c)) && self.creature_at(p).is_none()
    }

    /// Whether a cell of `kind` lies in the 3x3 area around the player.
    fn near(&self, kind: CellKind) -> bool {
        (-1..=1).any(|dy| (-1..=1).any(|dx| self.cell(self.player_pos.offset(dx, dy)) == Some(kind)))
    }

    fn plant_ripe(&self, p: Pos) -> bool {
        self.plants.get(&p).is_some_and(|&age| age >= self.config.plant_ripe_ticks)
    }

    fn add_item(&mut self, item: Item, n: i32) {
        let slot = self.inventory.entry(item).or_insert(0);
        *slot = (*slot + n).clamp(0, STAT_MAX);
    }

    fn unlock(&mut self, a: Achievement, name: &str, events: &mut Vec<Event>, unlocks: &mut Vec<Achievement>) {
        let fresh = self.unlocked.insert(a);
        if fresh {
            unlocks.push(a);
        }
        events.push(Event {
            name: name.into(),
            unlocks: if fresh { vec![a] } else { vec![] },
            health_delta: 0,
        });
    }

    fn hurt(&mut self, amount: i32, name: &str, events: &mut Vec<Event>) {
        let before = self.status.health;
        self.status.health = (before - amount).max(0);
        self.sleeping = false;
        events.push(Event {
            name: name.into(),
            unlocks: vec![],
            health_delta: self.status.health - before,
        });
    }

    fn apply_action(&mut self, action: Action, events: &mut Vec<Event>, unlocks: &mut Vec<Achievement>) {
        let target = self.facing_pos();
        match action {
            Action::Noop => {}
            Action::MoveLeft | Action::MoveRight | Action::MoveUp | Action::MoveDown => {
                let dir = action.direction().expect("movement action");
                self.player_facing = dir;
                let (dx, dy) = dir.delta();
                let next = self.player_pos.offset(dx, dy);
                if self.player_can_enter(next) {
                    self.player_pos = next;
                }
            }
            Action::Do => self.interact(target, events, unlocks),
            Action::Sleep => {
                self.sleeping = true;
                events.push(Event { name: "sleep".into(), unlocks: vec![], health_delta: 0 });
            }
            Action::PlaceStone => {
                self.add_item(Item::Stone, -1);
                self.set_cell(target, CellKind::PlacedStone);
                self.unlock(Achievement::PlaceStone, "place_stone", events, unlocks);
            }
            Action::PlaceTable => {
                self.add_item(Item::Wood, -1);
                self.set_cell(target, CellKind::Table);
                self.unlock(Achievement::PlaceTable, "place_table", events, unlocks);
            }
            Action::PlaceFurnace => {
                self.add_item(Item::Stone, -1);
                self.set_cell(target, CellKind::Furnace);
                self.unlock(Achievement::PlaceFurnace, "place_furnace", events, unlocks);
            }
            Action::PlacePlant => {
                self.add_item(Item::Sapling, -1);
                self.set_cell(target, CellKind::Plant);
                self.plants.insert(target, 0);
                self.unlock(Achievement::PlacePlant, "place_plant", events, unlocks);
            }
            Action::MakeWoodPickaxe => self.craft(&[Item::Wood], Item::WoodPickaxe, Achievement::MakeWoodPickaxe, events, unlocks),
            Action::MakeWoodSword => self.craft(&[Item::Wood], Item::WoodSword, Achievement::MakeWoodSword, events, unlocks),
            Action::MakeStonePickaxe => self.craft(&[Item::Wood, Item::Stone], Item::StonePickaxe, Achievement::MakeStonePickaxe, events, unlocks),
            Action::MakeStoneSword => self.craft(&[Item::Wood, Item::Stone], Item::StoneSword, Achievement::MakeStoneSword, events, unlocks),
            Action::MakeIronPickaxe => self.craft(&[Item::Wood, Item::Coal, Item::Iron], Item::IronPickaxe, Achievement::MakeIronPickaxe, events, unlocks),
            Action::MakeIronSword => self.craft(&[Item::Wood, Item::Coal, Item::Iron], Item::IronSword, Achievement::MakeIronSword, events, unlocks),
        }
    }

    fn craft(&mut self, cost: &[Item], product: Item, a: Achievement, events: &mut Vec<Event>, unlocks: &mut Vec<Achievement>) {
        for &item in cost {
            self.add_item(item, -1);
        }
        self.add_item(product, 1);
        self.unlock(a, product.name(), events, unlocks);
    }

    fn damage_dealt(&self) -> i32 {
        let tier = if self.item(Item::IronSword) > 0 {
            3
        } else if self.item(Item::StoneSword) > 0 {
            2
        } else {
            1
        };
        tier.max(1)
    }

    fn interact(&mut self, target: Pos, events: &mut Vec<Event>, unlocks: &mut Vec<Achievement>) {
        if let Some(i) = self.creature_at(target) {
            let damage = self.damage_dealt();
            self.entities[i].health -= damage;
            if self.entities[i].health > 0 {
                return;
            }
            let kind = self.entities.remove(i).kind;
            match kind {
                EntityKind::Cow => {
                    self.status.food = (self.status.food + self.config.cow_food).min(STAT_MAX);
                    self.counters.hunger = 0;
                    self.unlock(Achievement::EatCow, "eat_cow", events, unlocks);
                }
                EntityKind::Zombie => self.unlock(Achievement::DefeatZombie, "defeat_zombie", events, unlocks),
                EntityKind::Skeleton => self.unlock(Achievement::DefeatSkeleton, "defeat_skeleton", events, unlocks),
                EntityKind::Player => unreachable!("the player is not a creature"),
            }
            return;
        }
        let Some(cell) = self.cell(target) else { return };
        match cell {
            CellKind::Tree => {
                self.add_item(Item::Wood, 1);
                self.unlock(Achievement::CollectWood, "collect_wood", events, unlocks);
            }
            CellKind::Grass => {
                if self.rng.random_bool(self.config.sapling_chance) {
                    self.add_item(Item::Sapling, 1);
                    self.unlock(Achievement::CollectSapling, "collect_sapling", events, unlocks);
                }
            }
            CellKind::Water => {
                self.status.drink = (self.status.drink + 1).min(STAT_MAX);
                self.counters.thirst = 0;
                self.unlock(Achievement::CollectDrink, "collect_drink", events, unlocks);
            }
            CellKind::Stone | CellKind::PlacedStone => {
                self.add_item(Item::Stone, 1);
                self.set_cell(target, CellKind::Path);
                self.unlock(Achievement::CollectStone, "collect_stone", events, unlocks);
            }
            CellKind::CoalOre => {
                self.add_item(Item::Coal, 1);
                self.set_cell(target, CellKind::Path);
                self.unlock(Achievement::CollectCoal, "collect_coal", events, unlocks);
            }
            CellKind::IronOre => {
                self.add_item(Item::Iron, 1);
                self.set_cell(target, CellKind::Path);
                self.unlock(Achievement::CollectIron, "collect_iron", events, unlocks);
            }
            CellKind::DiamondOre => {
                self.add_item(Item::Diamond, 1);
                self.set_cell(target, CellKind::Path);
                self.unlock(Achievement::CollectDiamond, "collect_diamond", events, unlocks);
            }
            CellKind::Plant => {
                self.status.food = (self.status.food + self.config.plant_food).min(STAT_MAX);
                self.counters.hunger = 0;
                self.set_cell(target, CellKind::Grass);
                self.unlock(Achievement::EatPlant, "eat_plant", events, unlocks);
            }
            _ => {}
        }
    }

    fn grow_plants(&mut self) {
        for age in self.plants.values_mut() {
            *age = age.saturating_add(1);
        }
    }

    fn random_direction(&mut self) -> Direction {
        Direction::ALL[self.rng.random_range(0..Direction::COUNT)]
    }

    fn update_creatures(&mut self, events: &mut Vec<Event>) {
        let player = self.player_pos;
        let mut i = 0;
        while i < self.entities.len() {
            let mut c = self.entities[i];
            c.cooldown = c.cooldown.saturating_sub(1);
            let dist = c.pos.manhattan(player);
            match c.kind {
                EntityKind::Cow => {
                    if self.rng.random_bool(0.3) {
                        let (dx, dy) = self.random_direction().delta();
                        let next = c.pos.offset(dx, dy);
                        if self.creature_can_enter(next, CellKind::creature_walkable) {
                            c.pos = next;
                        }
                    }
                }
                EntityKind::Zombie => {
                    if dist <= 1 {
                        if c.cooldown == 0 {
                            c.cooldown = self.config.zombie_cooldown;
                            self.hurt(self.config.zombie_damage, "zombie_attack", events);
                        }
                    } else {
                        let toward = dist <= 8 && self.rng.random_bool(0.8);
                        let (dx, dy) = if toward {
                            let (ddx, ddy) = (player.x - c.pos.x, player.y - c.pos.y);
                            if ddx.abs() >= ddy.abs() {
                                (ddx.signum(), 0)
                            } else {
                                (0, ddy.signum())
                            }
                        } else {
                            self.random_direction().delta()
                        };
                        let next = c.pos.offset(dx, dy);
                        if self.creature_can_enter(next, CellKind::creature_walkable) {
                            c.pos = next;
                        }
                    }
                }
                EntityKind::Skeleton => {
                    if dist <= 4 && c.cooldown == 0 && self.rng.random_bool(0.2) {
                        c.cooldown = self.config.skeleton_reload;
                        self.hurt(self.config.arrow_damage, "arrow_hit", events);
                    } else if self.rng.random_bool(0.2) {
                        let (dx, dy) = self.random_direction().delta();
                        let next = c.pos.offset(dx, dy);
                        if self.creature_can_enter(next, |k| k == CellKind::Path) {
                            c.pos = next;
                        }
                    }
                }
                EntityKind::Player => {}
            }
            self.entities[i] = c;
            i += 1;
        }
    }

    fn count_near(&self, kind: EntityKind, radius: i32) -> usize {
        self.entities
            .iter()
            .filter(|c| c.kind == kind && c.pos.chebyshev(self.player_pos) <= radius)
            .count()
    }

    /// Picks a random cell at Chebyshev distance 3..=6 from the player.
    fn random_nearby(&mut self) -> Pos {
        loop {
            let dx: i32 = self.rng.random_range(-6..=6);
            let dy: i32 = self.rng.random_range(-6..=6);
            if dx.abs().max(dy.abs()) >= 3 {
                return self.player_pos.offset(dx, dy);
            }
        }
    }

    fn spawn_and_despawn(&mut self) {
        let night = self.is_night();
        if night && self.rng.random_bool(self.config.zombie_spawn_prob) {
            let p = self.random_nearby();
            if self.count_near(EntityKind::Zombie, 8) < 3
                && self.creature_can_enter(p, |k| k == CellKind::Grass)
            {
                self.entities.push(Creature {
                    kind: EntityKind::Zombie,
                    pos: p,
                    health: self.config.zombie_health,
                    cooldown: self.config.zombie_cooldown,
                });
            }
        }
        if self.rng.random_bool(self.config.skeleton_spawn_prob) {
            let p = self.random_nearby();
            if self.count_near(EntityKind::Skeleton, 8) < 2
                && self.creature_can_enter(p, |k| k == CellKind::Path)
            {
                self.entities.push(Creature {
                    kind: EntityKind::Skeleton,
                    pos: p,
                    health: self.config.skeleton_health,
                    cooldown: self.config.skeleton_reload,
                });
            }
        }
        if self.rng.random_bool(self.config.cow_spawn_prob) {
            let p = self.random_nearby();
            if self.count_near(EntityKind::Cow, 8) < 3
                && self.creature_can_enter(p, |k| k == CellKind::Grass)
            {
                self.entities.push(Creature {
                    kind: EntityKind::Cow,
                    pos: p,
                    health: self.config.cow_health,
                    cooldown: 0,
                });
            }
        }
        if !night {
            let player = self.player_pos;
            let before = self.entities.len();
            let mut keep = Vec::with_capacity(before);
            for c in std::mem::take(&mut self.entities) {
                let far_zombie = c.kind == EntityKind::Zombie && c.pos.chebyshev(player) > 6;
                if far_zombie && self.rng.random_bool(0.1) {
                    continue;
                }
                keep.push(c);
            }
            self.entities = keep;
        }
    }

    fn update_life(&mut self, events: &mut Vec<Event>, unlocks: &mut Vec<Achievement>) {
        let cfg = &self.config;
        let (food_decay, drink_decay, energy_decay) = (cfg.food_decay, cfg.drink_decay, cfg.energy_decay);
        let (starve_interval, regen_interval) = (cfg.starve_interval, cfg.regen_interval);

        self.counters.hunger += 1;
        if self.counters.hunger >= food_decay {
            self.counters.hunger = 0;
            self.status.food = (self.status.food - 1).max(0);
        }
        self.counters.thirst += 1;
        if self.counters.thirst >= drink_decay {
            self.counters.thirst = 0;
            self.status.drink = (self.status.drink - 1).max(0);
        }
        if self.sleeping {
            self.counters.fatigue = 0;
            self.status.energy = (self.status.energy + 1).min(STAT_MAX);
            if self.status.energy >= STAT_MAX {
                self.sleeping = false;
                if self.is_night() {
                    self.unlock(Achievement::WakeUp, "wake_up", events, unlocks);
                }
            }
        } else {
            self.counters.fatigue += 1;
            if self.counters.fatigue >= energy_decay {
                self.counters.fatigue = 0;
                self.status.energy = (self.status.energy - 1).max(0);
            }
        }

        let depleted = [self.status.food, self.status.drink, self.status.energy]
            .iter()
            .filter(|&&v| v == 0)
            .count() as u32;
        if depleted > 0 {
            self.counters.regen = 0;
            self.counters.starve += depleted;
            while self.counters.starve >= starve_interval {
                self.counters.starve -= starve_interval;
                self.hurt(1, "starving", events);
            }
        } else {
            self.counters.starve = 0;
            self.counters.regen += 1;
            if self.counters.regen >= regen_interval {
                self.counters.regen = 0;
                if self.status.health < STAT_MAX {
                    self.status.health += 1;
                    events.push(Event { name: "recover".into(), unlocks: vec![], health_delta: 1 });
                }
            }
        }
    }
}
