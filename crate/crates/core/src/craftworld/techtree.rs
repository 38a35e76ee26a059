use super::Achievement::{self, *};

/// Deepest level in the tech tree (Collect Diamond).
pub const MAX_DEPTH: u32 = 8;

/// Direct prerequisites of an achievement in the tech tree.
pub fn prerequisites(a: Achievement) -> &'static [Achievement] {
    match a {
        CollectWood | CollectSapling | CollectDrink | EatCow | DefeatZombie | DefeatSkeleton
        | WakeUp => &[],
        PlaceTable => &[CollectWood],
        MakeWoodPickaxe | MakeWoodSword => &[PlaceTable],
        CollectStone | CollectCoal => &[MakeWoodPickaxe],
        PlaceStone | PlaceFurnace | MakeStonePickaxe | MakeStoneSword => &[CollectStone],
        CollectIron => &[MakeStonePickaxe],
        MakeIronPickaxe | MakeIronSword => &[CollectIron, PlaceFurnace, CollectCoal, PlaceTable],
        CollectDiamond => &[MakeIronPickaxe],
        PlacePlant => &[CollectSapling],
        EatPlant => &[PlacePlant],
    }
}

/// Length of the longest prerequisite chain ending at `a`; leaves are 1.
pub fn achievement_depth(a: Achievement) -> u32 {
    1 + prerequisites(a)
        .iter()
        .map(|&p| achievement_depth(p))
        .max()
        .unwrap_or(0)
}
