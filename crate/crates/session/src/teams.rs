//! Stored robot teams and the study round plan drawn from them.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use swarm_core::rng::{mix, stream};
use swarm_core::{BehaviorParams, SwarmConfig, WorldConstants};

use crate::round::RoundSpec;

/// One entry of `teams.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Team {
    pub config_id: u32,
    pub speed: f64,
    pub separation: f64,
    pub broadcast: f64,
    /// Warmth × competence quadrant the team belongs to.
    pub group_label: String,
}

impl Team {
    pub fn params(&self) -> BehaviorParams {
        BehaviorParams::new(self.speed, self.separation, self.broadcast)
    }
}

pub const STUDY_GROUPS: usize = 4;
pub const TEAMS_PER_GROUP: usize = 5;

pub fn load_teams(path: &Path) -> Result<Vec<Team>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let teams: Vec<Team> = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    for t in &teams {
        t.params()
            .validate()
            .map_err(|e| format!("team {}: {e}", t.config_id))?;
    }
    Ok(teams)
}

/// Samples five teams from each of the four groups, shuffles the twenty
/// rounds, and draws the operator's robot per round. A pure function of
/// `teams` and `seed`.
pub fn study_plan(teams: &[Team], seed: u64) -> Result<Vec<RoundSpec>, String> {
    let mut groups: BTreeMap<&str, Vec<&Team>> = BTreeMap::new();
    for t in teams {
        groups.entry(t.group_label.as_str()).or_default().push(t);
    }
    if groups.len() != STUDY_GROUPS {
        return Err(format!(
            "study mode needs teams in exactly {STUDY_GROUPS} groups, found {}",
            groups.len()
        ));
    }
    let mut rng = stream(seed, u64::MAX - 1);
    let mut picked: Vec<&Team> = Vec::with_capacity(STUDY_GROUPS * TEAMS_PER_GROUP);
    for (label, members) in &groups {
        if members.len() < TEAMS_PER_GROUP {
            return Err(format!(
                "group `{label}` has {} teams, needs {TEAMS_PER_GROUP}",
                members.len()
            ));
        }
        picked.extend(members.choose_multiple(&mut rng, TEAMS_PER_GROUP).copied());
    }
    picked.shuffle(&mut rng);
    let swarm_size = WorldConstants::default().swarm_size;
    Ok(picked
        .into_iter()
        .enumerate()
        .map(|(i, team)| {
            let round_index = i as u32 + 1;
            RoundSpec {
                round_index,
                config: SwarmConfig::new(team.params(), mix(seed, round_index as u64))
                    .with_limit(RoundSpec::STUDY_TIME_LIMIT),
                human_robot_id: rng.random_range(0..swarm_size),
                time_limit: RoundSpec::STUDY_TIME_LIMIT,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn sample_teams() -> Vec<Team> {
        let labels = ["high_w_high_c", "high_w_low_c", "low_w_high_c", "low_w_low_c"];
        BehaviorParams::full_grid()
            .into_iter()
            .take(28)
            .enumerate()
            .map(|(i, p)| Team {
                config_id: p.grid_id().unwrap(),
                speed: p.speed,
                separation: p.separation,
                broadcast: p.broadcast,
                group_label: labels[i % 4].to_string(),
            })
            .collect()
    }

    #[test]
    fn plan_has_five_per_group() {
        let teams = sample_teams();
        let plan = study_plan(&teams, 17).unwrap();
        assert_eq!(plan.len(), 20);
        assert!(plan.iter().enumerate().all(|(i, r)| r.round_index == i as u32 + 1));
        let mut per_group: BTreeMap<String, usize> = BTreeMap::new();
        for r in &plan {
            let team = teams.iter().find(|t| Some(t.config_id) == r.config_id()).unwrap();
            *per_group.entry(team.group_label.clone()).or_default() += 1;
            assert_eq!(r.time_limit, 60.0);
            assert!(r.human_robot_id < 10);
        }
        assert!(per_group.values().all(|&n| n == 5));
        let mut ids: Vec<_> = plan.iter().map(|r| r.config_id()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 20, "no team twice");
        assert_eq!(plan, study_plan(&teams, 17).unwrap());
        assert_ne!(plan, study_plan(&teams, 18).unwrap());
    }

    #[test]
    fn small_groups_are_refused() {
        let teams: Vec<Team> = sample_teams().into_iter().take(16).collect();
        assert!(study_plan(&teams, 1).is_err());
    }
}
