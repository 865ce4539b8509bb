//! Sectional profile around one entity (me) or entity set (mes): a core
//! label, a donut of type proportions, and a mantle of associated sets whose
//! per-type axis heights are `count × h_t`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{Entity, EntitySet, EntityType};
use crate::relations::co_occurrence;

pub const DEFAULT_AXIS_UNIT: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FocusKind {
    Me,
    Mes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusTarget {
    pub kind: FocusKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub me: Option<Entity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mes: Option<String>,
    /// Entity set ids searched for associates.
    pub scope: Vec<String>,
}

impl FocusTarget {
    pub fn entity(entity: Entity, scope: Vec<String>) -> Self {
        FocusTarget {
            kind: FocusKind::Me,
            me: Some(entity),
            mes: None,
            scope,
        }
    }

    pub fn entity_set(id: impl Into<String>, scope: Vec<String>) -> Self {
        FocusTarget {
            kind: FocusKind::Mes,
            me: None,
            mes: Some(id.into()),
            scope,
        }
    }

    fn validate(&self) -> Result<()> {
        match (self.kind, &self.me, &self.mes) {
            (FocusKind::Me, Some(_), None) | (FocusKind::Mes, None, Some(_)) => Ok(()),
            _ => Err(Error::invalid("focus target must name exactly one entity or entity set")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DonutSlice {
    #[serde(rename = "type")]
    pub etype: EntityType,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociateAxis {
    pub entity_set_id: String,
    pub strength: usize,
    /// Height per type for all nine types, `count × h_t`.
    pub heights: BTreeMap<EntityType, f64>,
    /// Normalized entity names grouped by type.
    pub entities: BTreeMap<EntityType, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocusProfile {
    pub kind: FocusKind,
    pub target_id: String,
    pub core_label: String,
    pub donut: Vec<DonutSlice>,
    pub associates: Vec<AssociateAxis>,
    pub h_t: f64,
}

fn lookup<'a>(sets: &'a [EntitySet]) -> HashMap<&'a str, &'a EntitySet> {
    sets.iter().map(|s| (s.id.as_str(), s)).collect()
}

/// Associated sets with their co-occurrence strength, strongest first, ties by id.
/// An entity focus gives every containing set strength 1.
pub fn collect_associates(target: &FocusTarget, sets: &[EntitySet]) -> Result<Vec<(String, usize)>> {
    target.validate()?;
    if target.scope.is_empty() {
        return Err(Error::invalid("focus scope is empty"));
    }
    let by_id = lookup(sets);
    let scope = target
        .scope
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::not_found(format!("entity set {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<(String, usize)> = match (&target.me, &target.mes) {
        (Some(e), _) => scope
            .iter()
            .filter(|s| s.contains(e))
            .map(|s| (s.id.clone(), 1))
            .collect(),
        (None, Some(id)) => {
            if !target.scope.contains(id) {
                return Err(Error::not_found(format!("focused set {id} is not in scope")));
            }
            let focus = by_id[id.as_str()];
            scope
                .iter()
                .filter(|s| s.id != *id)
                .map(|s| (s.id.clone(), co_occurrence(focus, s).strength))
                .filter(|&(_, n)| n > 0)
                .collect()
        }
        (None, None) => unreachable!("validated"),
    };
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out.dedup_by(|a, b| a.0 == b.0);
    Ok(out)
}

pub fn focus_profile(target: &FocusTarget, sets: &[EntitySet], h_t: f64) -> Result<FocusProfile> {
    if !(h_t > 0.0 && h_t.is_finite()) {
        return Err(Error::invalid("axis unit must be positive"));
    }
    let associates = collect_associates(target, sets)?;
    let by_id = lookup(sets);
    let (target_id, core_label, donut) = match (&target.me, &target.mes) {
        (Some(e), _) => (
            format!("{}:{}", e.etype, e.normalized),
            e.normalized.clone(),
            vec![DonutSlice {
                etype: e.etype,
                proportion: 1.0,
            }],
        ),
        (None, Some(id)) => {
            let s = by_id[id.as_str()];
            let total = s.counts_by_type.total();
            let donut = s
                .counts_by_type
                .iter()
                .map(|(t, n)| DonutSlice {
                    etype: t,
                    proportion: n as f64 / total as f64,
                })
                .collect();
            (id.clone(), s.paragraph_id.clone(), donut)
        }
        (None, None) => unreachable!("validated"),
    };
    let associates = associates
        .into_iter()
        .map(|(id, strength)| {
            let s = by_id[id.as_str()];
            let heights = EntityType::ALL
                .iter()
                .map(|&t| (t, s.counts_by_type.get(t) as f64 * h_t))
                .collect();
            let mut entities: BTreeMap<EntityType, Vec<String>> = BTreeMap::new();
            for e in &s.entities {
                entities.entry(e.etype).or_default().push(e.normalized.clone());
            }
            AssociateAxis {
                entity_set_id: id,
                strength,
                heights,
                entities,
            }
        })
        .collect();
    Ok(FocusProfile {
        kind: target.kind,
        target_id,
        core_label,
        donut,
        associates,
        h_t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisSegment {
    #[serde(rename = "type")]
    pub etype: EntityType,
    pub base: f64,
    pub top: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MantleAxis {
    pub entity_set_id: String,
    pub angle: f64,
    /// Nonzero types stacked outward in pole order.
    pub segments: Vec<AxisSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MantleBand {
    #[serde(rename = "type")]
    pub etype: EntityType,
    pub from_axis: usize,
    pub to_axis: usize,
    pub from_height: f64,
    pub to_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MantleGeometry {
    pub axes: Vec<MantleAxis>,
    pub bands: Vec<MantleBand>,
}

/// Axes at uniform angles in associate order; one band per type present on
/// either of two consecutive axes (no wrap-around).
pub fn mantle_geometry(profile: &FocusProfile) -> Result<MantleGeometry> {
    let n = profile.associates.len();
    if n == 0 {
        return Err(Error::invalid("mantle needs at least one associate"));
    }
    let axes = profile
        .associates
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut base = 0.0;
            let segments = EntityType::ALL
                .iter()
                .filter(|t| a.heights[t] > 0.0)
                .map(|&t| {
                    let seg = AxisSegment {
                        etype: t,
                        base,
                        top: base + a.heights[&t],
                    };
                    base = seg.top;
                    seg
                })
                .collect();
            MantleAxis {
                entity_set_id: a.entity_set_id.clone(),
                angle: TAU * i as f64 / n as f64,
                segments,
            }
        })
        .collect();
    let mut bands = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (&profile.associates[i], &profile.associates[i + 1]);
        for t in EntityType::ALL {
            let (ha, hb) = (a.heights[&t], b.heights[&t]);
            if ha > 0.0 || hb > 0.0 {
                bands.push(MantleBand {
                    etype: t,
                    from_axis: i,
                    to_axis: i + 1,
                    from_height: ha,
                    to_height: hb,
                });
            }
        }
    }
    Ok(MantleGeometry { axes, bands })
}

/// Payload for the sectional view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocusExport {
    pub core: FocusCore,
    pub donut: Vec<DonutSlice>,
    pub associates: Vec<AssociateAxis>,
    pub mantle: Option<MantleGeometry>,
    pub h_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocusCore {
    pub kind: FocusKind,
    pub id: String,
    pub label: String,
}

impl FocusProfile {
    pub fn export(&self) -> FocusExport {
        FocusExport {
            core: FocusCore {
                kind: self.kind,
                id: self.target_id.clone(),
                label: self.core_label.clone(),
            },
            donut: self.donut.clone(),
            associates: self.associates.clone(),
            mantle: mantle_geometry(self).ok(),
            h_t: self.h_t,
        }
    }
}
