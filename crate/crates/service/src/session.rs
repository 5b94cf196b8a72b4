use std::collections::BTreeMap;

use artvista_core::PbnTemplate;
use serde::{Deserialize, Serialize};
use time::OffsetDateTime;

use crate::error::{Result, ServiceError};
use crate::store::is_valid_id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fill {
    pub matches_template: bool,
    pub number: u32,
}

/// Fields are declared in key order so the serialized JSON is canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaintSession {
    #[serde(with = "time::serde::rfc3339")]
    pub created_at: OffsetDateTime,
    pub fills: BTreeMap<u32, Fill>,
    pub id: String,
    /// Correct fills over region count.
    pub progress: f64,
    pub region_count: u32,
    pub template_id: String,
    #[serde(with = "time::serde::rfc3339")]
    pub updated_at: OffsetDateTime,
}

fn progress(fills: &BTreeMap<u32, Fill>, region_count: u32) -> f64 {
    fills.values().filter(|f| f.matches_template).count() as f64 / region_count as f64
}

/// Truncated to whole microseconds so timestamps survive an RFC 3339 round trip.
pub fn now() -> OffsetDateTime {
    let t = OffsetDateTime::now_utc();
    t.replace_nanosecond(t.nanosecond() / 1000 * 1000).expect("in range")
}

impl PaintSession {
    pub fn new(id: String, template_id: String, template: &PbnTemplate, now: OffsetDateTime) -> Self {
        Self {
            created_at: now,
            fills: BTreeMap::new(),
            id,
            progress: 0.0,
            region_count: template.regions.len() as u32,
            template_id,
            updated_at: now,
        }
    }

    /// Records (or overwrites) the fill for one region. Wrong colors are
    /// accepted and flagged.
    pub fn apply_fill(&mut self, t: &PbnTemplate, region_id: u32, number: u32, now: OffsetDateTime) -> Result<()> {
        let region = t
            .region(region_id)
            .ok_or_else(|| ServiceError::Validation(format!("region_id {region_id} is not in the template")))?;
        if !t.palette.entries().iter().any(|e| e.number == number) {
            return Err(ServiceError::Validation(format!(
                "number {number} is not in the palette (1..={})",
                t.palette.len()
            )));
        }
        self.fills.insert(
            region_id,
            Fill {
                matches_template: region.number == number,
                number,
            },
        );
        self.progress = progress(&self.fills, self.region_count);
        self.updated_at = now.max(self.updated_at);
        Ok(())
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("session serializes")
    }

    /// Parses a stored session and checks its internal invariants.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let s: PaintSession =
            serde_json::from_slice(bytes).map_err(|e| ServiceError::Validation(format!("malformed session: {e}")))?;
        let bad = |m: String| Err(ServiceError::Validation(m));
        if !is_valid_id(&s.id) || !is_valid_id(&s.template_id) {
            return bad("session ids must be 32 lowercase hex digits".into());
        }
        if s.region_count == 0 {
            return bad("region_count must be positive".into());
        }
        if let Some(&r) = s.fills.keys().find(|&&r| r >= s.region_count) {
            return bad(format!("fill for region {r} outside 0..{}", s.region_count));
        }
        if s.progress != progress(&s.fills, s.region_count) {
            return bad(format!("progress {} does not match the fills", s.progress));
        }
        if s.updated_at < s.created_at {
            return bad("updated_at precedes created_at".into());
        }
        Ok(s)
    }
}
