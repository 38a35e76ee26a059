use std::collections::BTreeMap;

use super::{EntityKind, Observation};

/// Textual rendering of an observation for prompts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SceneText {
    /// Distinct visible object names, nearest first, ties by name.
    pub sees: Vec<String>,
    /// "<h> health, <f> food, <d> drink, <e> energy"
    pub status: String,
    /// Nearest instance of each visible object, as player-relative `(dx, dy)`
    /// with `dx` growing rightwards and `dy` growing upwards.
    pub objects: Vec<(String, i32, i32)>,
}

impl SceneText {
    /// "grass, water, cow"
    pub fn sees_line(&self) -> String {
        self.sees.join(", ")
    }

    /// "cow(2,2), tree(3,1)"
    pub fn objects_line(&self) -> String {
        self.objects
            .iter()
            .map(|(name, dx, dy)| format!("{name}({dx},{dy})"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

pub fn render_scene_text(obs: &Observation) -> SceneText {
    let cx = Observation::CENTER_COL as i32;
    let cy = Observation::CENTER_ROW as i32;
    // name -> (squared distance, dx, dy) of the nearest instance
    let mut nearest: BTreeMap<&'static str, (i32, i32, i32)> = BTreeMap::new();
    let mut note = |name: &'static str, dx: i32, dy: i32| {
        let d2 = dx * dx + dy * dy;
        let entry = nearest.entry(name).or_insert((d2, dx, dy));
        if (d2, dx, dy) < *entry {
            *entry = (d2, dx, dy);
        }
    };
    for (row, line) in obs.local_view.iter().enumerate() {
        for (col, cell) in line.iter().enumerate() {
            let dx = col as i32 - cx;
            let dy = cy - row as i32;
            if let Some(kind) = cell.cell {
                note(kind.display_name(), dx, dy);
            }
            match cell.entity {
                Some(EntityKind::Player) | None => {}
                Some(e) => note(e.name(), dx, dy),
            }
        }
    }
    let mut ordered: Vec<_> = nearest.into_iter().collect();
    ordered.sort_by(|a, b| (a.1 .0, a.0).cmp(&(b.1 .0, b.0)));

    SceneText {
        sees: ordered.iter().map(|(n, _)| n.to_string()).collect(),
        status: obs.status.render(),
        objects: ordered.iter().map(|(n, (_, dx, dy))| (n.to_string(), *dx, *dy)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::craftworld::{CellKind, PlayerStatus, ViewCell};

    #[test]
    fn grass_water_cow() {
        let mut obs = Observation::void();
        for row in obs.local_view.iter_mut() {
            for cell in row.iter_mut() {
                *cell = ViewCell { cell: Some(CellKind::Grass), entity: None };
            }
        }
        obs.local_view[3][4].entity = Some(EntityKind::Player);
        obs.local_view[1][4].cell = Some(CellKind::Water);
        obs.local_view[1][7].entity = Some(EntityKind::Cow);
        let scene = render_scene_text(&obs);
        assert_eq!(scene.sees_line(), "grass, water, cow");
        assert_eq!(scene.objects_line(), "grass(0,0), water(0,2), cow(3,2)");
    }

    #[test]
    fn all_void_view_is_empty() {
        let scene = render_scene_text(&Observation::void());
        assert!(scene.sees.is_empty());
        assert_eq!(scene.sees_line(), "");
    }

    #[test]
    fn status_line() {
        let mut obs = Observation::void();
        obs.status = PlayerStatus::new(8, 8, 8, 6);
        assert_eq!(render_scene_text(&obs).status, "8 health, 8 food, 8 drink, 6 energy");
    }
}
