//! A seedable Crafter-style survival grid world.
//!
//! The world is a square map of terrain cells with a handful of creatures. The
//! player collects resources, crafts tools, and survives hunger, thirst,
//! fatigue and monsters. Twenty-two achievements pay +1 the first time they are
//! unlocked in an episode, and every health point gained or lost pays +/-0.1.

mod record;
mod scene;
mod techtree;
mod world;
mod worldgen;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use record::{EpisodeRecorder, StepRecord};
pub use scene::{render_scene_text, SceneText};
pub use techtree::{achievement_depth, prerequisites, MAX_DEPTH};
pub use world::{EnvConfig, WorldError, WorldState};

/// Width of the egocentric view in cells.
pub const VIEW_COLS: usize = 9;
/// Height of the egocentric view in cells.
pub const VIEW_ROWS: usize = 7;
/// Maximum value of every status field and every inventory count.
pub const STAT_MAX: i32 = 9;

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const COUNT: usize = $name::ALL.len();

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn from_index(index: usize) -> Option<Self> {
                $name::ALL.get(index).copied()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = UnknownName;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| UnknownName(s.to_string()))
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown name `{0}`")]
pub struct UnknownName(pub String);

named_enum! {
    /// Terrain held by a map cell.
    CellKind {
        Grass => "grass",
        Sand => "sand",
        Water => "water",
        Tree => "tree",
        Stone => "stone",
        CoalOre => "coal_ore",
        IronOre => "iron_ore",
        DiamondOre => "diamond_ore",
        Path => "path",
        Table => "table",
        Furnace => "furnace",
        Plant => "plant",
        PlacedStone => "placed_stone",
        Lava => "lava",
    }
}

impl CellKind {
    /// Name used in scene descriptions.
    pub fn display_name(self) -> &'static str {
        match self {
            CellKind::CoalOre => "coal",
            CellKind::IronOre => "iron",
            CellKind::DiamondOre => "diamond",
            CellKind::PlacedStone => "stone",
            other => other.name(),
        }
    }

    /// Cells the player can stand on. Lava is walkable and lethal.
    pub fn walkable(self) -> bool {
        matches!(self, CellKind::Grass | CellKind::Sand | CellKind::Path | CellKind::Lava)
    }

    /// Cells creatures can stand on.
    pub fn creature_walkable(self) -> bool {
        matches!(self, CellKind::Grass | CellKind::Sand | CellKind::Path)
    }
}

named_enum! {
    /// Creatures that occupy cells. `Player` only appears in observations.
    EntityKind {
        Player => "player",
        Cow => "cow",
        Zombie => "zombie",
        Skeleton => "skeleton",
    }
}

named_enum! {
    /// The 17 discrete actions, with stable codes 0..=16.
    Action {
        Noop => "noop",
        MoveLeft => "move_left",
        MoveRight => "move_right",
        MoveUp => "move_up",
        MoveDown => "move_down",
        Do => "do",
        Sleep => "sleep",
        PlaceStone => "place_stone",
        PlaceTable => "place_table",
        PlaceFurnace => "place_furnace",
        PlacePlant => "place_plant",
        MakeWoodPickaxe => "make_wood_pickaxe",
        MakeStonePickaxe => "make_stone_pickaxe",
        MakeIronPickaxe => "make_iron_pickaxe",
        MakeWoodSword => "make_wood_sword",
        MakeStoneSword => "make_stone_sword",
        MakeIronSword => "make_iron_sword",
    }
}

impl Action {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::from_index(code as usize)
    }

    fn direction(self) -> Option<Direction> {
        match self {
            Action::MoveLeft => Some(Direction::Left),
            Action::MoveRight => Some(Direction::Right),
            Action::MoveUp => Some(Direction::Up),
            Action::MoveDown => Some(Direction::Down),
            _ => None,
        }
    }
}

named_enum! {
    /// The 22 achievements, in alphabetical order.
    Achievement {
        CollectCoal => "Collect Coal",
        CollectDiamond => "Collect Diamond",
        CollectDrink => "Collect Drink",
        CollectIron => "Collect Iron",
        CollectSapling => "Collect Sapling",
        CollectStone => "Collect Stone",
        CollectWood => "Collect Wood",
        DefeatSkeleton => "Defeat Skeleton",
        DefeatZombie => "Defeat Zombie",
        EatCow => "Eat Cow",
        EatPlant => "Eat Plant",
        MakeIronPickaxe => "Make Iron Pickaxe",
        MakeIronSword => "Make Iron Sword",
        MakeStonePickaxe => "Make Stone Pickaxe",
        MakeStoneSword => "Make Stone Sword",
        MakeWoodPickaxe => "Make Wood Pickaxe",
        MakeWoodSword => "Make Wood Sword",
        PlaceFurnace => "Place Furnace",
        PlacePlant => "Place Plant",
        PlaceStone => "Place Stone",
        PlaceTable => "Place Table",
        WakeUp => "Wake Up",
    }
}

impl Achievement {
    /// Lowercase form used in trajectory text and goals ("eat cow").
    pub fn phrase(self) -> String {
        self.name().to_lowercase()
    }
}

named_enum! {
    /// Inventory items, in observation-encoding order.
    Item {
        Wood => "wood",
        Stone => "stone",
        Coal => "coal",
        Iron => "iron",
        Diamond => "diamond",
        Sapling => "sapling",
        WoodPickaxe => "wood_pickaxe",
        StonePickaxe => "stone_pickaxe",
        IronPickaxe => "iron_pickaxe",
        WoodSword => "wood_sword",
        StoneSword => "stone_sword",
        IronSword => "iron_sword",
    }
}

named_enum! {
    /// Facing direction of the player.
    Direction {
        Left => "left",
        Right => "right",
        Up => "up",
        Down => "down",
    }
}

impl Direction {
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
        }
    }
}

/// Map coordinate: `x` is the column, `y` the row (growing downwards).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub fn new(x: i32, y: i32) -> Self {
        Pos { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn chebyshev(self, other: Pos) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlayerStatus {
    pub health: i32,
    pub food: i32,
    pub drink: i32,
    pub energy: i32,
}

impl PlayerStatus {
    pub const FULL: PlayerStatus = PlayerStatus { health: 9, food: 9, drink: 9, energy: 9 };

    pub fn new(health: i32, food: i32, drink: i32, energy: i32) -> Self {
        PlayerStatus { health, food, drink, energy }
    }

    /// `(name, value)` pairs in display order.
    pub fn fields(&self) -> [(&'static str, i32); 4] {
        [
            ("health", self.health),
            ("food", self.food),
            ("drink", self.drink),
            ("energy", self.energy),
        ]
    }

    /// "7 health, 5 food, 6 drink, 4 energy"
    pub fn render(&self) -> String {
        format!(
            "{} health, {} food, {} drink, {} energy",
            self.health, self.food, self.drink, self.energy
        )
    }

    pub(crate) fn clamp(&mut self) {
        for v in [&mut self.health, &mut self.food, &mut self.drink, &mut self.energy] {
            *v = (*v).clamp(0, STAT_MAX);
        }
    }
}

impl Default for PlayerStatus {
    fn default() -> Self {
        PlayerStatus::FULL
    }
}

/// Item counts. Missing items count as zero.
pub type Inventory = BTreeMap<Item, i32>;

/// One cell of the egocentric view. `cell == None` marks off-map void.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ViewCell {
    pub cell: Option<CellKind>,
    pub entity: Option<EntityKind>,
}

impl ViewCell {
    pub const VOID: ViewCell = ViewCell { cell: None, entity: None };
}

/// What the agent sees: a 9x7 window centred on the player (column 4, row 3).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    /// `local_view[row][col]`
    pub local_view: [[ViewCell; VIEW_COLS]; VIEW_ROWS],
    pub status: PlayerStatus,
    pub inventory: Inventory,
    pub facing: Direction,
}

impl Observation {
    pub const CENTER_COL: usize = VIEW_COLS / 2;
    pub const CENTER_ROW: usize = VIEW_ROWS / 2;

    /// An observation with nothing visible and full stats.
    pub fn void() -> Self {
        Observation {
            local_view: [[ViewCell::VOID; VIEW_COLS]; VIEW_ROWS],
            status: PlayerStatus::FULL,
            inventory: Inventory::new(),
            facing: Direction::Down,
        }
    }

    pub fn item(&self, item: Item) -> i32 {
        self.inventory.get(&item).copied().unwrap_or(0)
    }
}

/// Something that happened during a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    pub unlocks: Vec<Achievement>,
    pub health_delta: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    /// Achievements unlocked for the first time this episode on this step.
    pub unlocks: Vec<Achievement>,
    /// Health after the step minus health before it.
    pub health_delta: i32,
    pub events: Vec<Event>,
}

/// Reward for a step: +1 per new unlock, +/-0.1 per health point.
pub fn step_reward(new_unlocks: usize, health_delta: i32) -> f64 {
    new_unlocks as f64 + 0.1 * health_delta as f64
}
