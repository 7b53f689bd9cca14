use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitMode {
    /// One plan per scene, holding that scene out for testing.
    LeaveOneOut,
    /// A single plan with the named scenes held out.
    Fixed { test: Vec<String> },
}

/// Disjoint train/test scene sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train_scenes: BTreeSet<String>,
    pub test_scenes: BTreeSet<String>,
    pub mode: SplitMode,
}

pub fn make_splits(scenes: &[String], mode: SplitMode) -> Result<Vec<SplitPlan>> {
    let all: BTreeSet<String> = scenes.iter().cloned().collect();
    if all.len() != scenes.len() {
        return Err(Error::Config("scene names must be unique".into()));
    }
    match &mode {
        SplitMode::LeaveOneOut => {
            if scenes.len() < 2 {
                return Err(Error::Config(format!(
                    "leave-one-out needs at least 2 scenes, got {}",
                    scenes.len()
                )));
            }
            Ok(scenes
                .iter()
                .map(|held| SplitPlan {
                    train_scenes: all.iter().filter(|s| *s != held).cloned().collect(),
                    test_scenes: BTreeSet::from([held.clone()]),
                    mode: mode.clone(),
                })
                .collect())
        }
        SplitMode::Fixed { test } => {
            let test_set: BTreeSet<String> = test.iter().cloned().collect();
            if let Some(missing) = test_set.iter().find(|t| !all.contains(*t)) {
                return Err(Error::Config(format!("unknown test scene `{missing}`")));
            }
            Ok(vec![SplitPlan {
                train_scenes: all.difference(&test_set).cloned().collect(),
                test_scenes: test_set,
                mode: mode.clone(),
            }])
        }
    }
}
