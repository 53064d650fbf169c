//! Risk input documents, merged with a case at load time.

use serde::{Deserialize, Serialize};

use super::{
    build_risk_table, default_line_exposure, line_exposure, point_exposure, AreaRisk, Exposure,
    RiskError, RiskTable, DEFAULT_KM_PER_SEGMENT,
};
use crate::network::{ComponentKind, ComponentRef, Network};

pub const RISK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaOverride {
    pub kind: ComponentKind,
    pub id: u32,
    pub area_id: u32,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaLength {
    pub area_id: u32,
    pub km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineGeography {
    pub line_id: u32,
    pub segments: Vec<AreaLength>,
}

/// Area risk values, κ overrides and line routes for one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskInput {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub km_per_segment: Option<f64>,
    pub area_risks: Vec<AreaRisk>,
    #[serde(default)]
    pub kappa_overrides: Vec<KappaOverride>,
    #[serde(default)]
    pub line_geography: Vec<LineGeography>,
}

impl RiskInput {
    pub fn new(area_risks: Vec<AreaRisk>) -> Self {
        RiskInput {
            format_version: RISK_FORMAT_VERSION,
            km_per_segment: None,
            area_risks,
            kappa_overrides: Vec::new(),
            line_geography: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, RiskError> {
        let input: RiskInput =
            serde_json::from_str(text).map_err(|e| RiskError::Malformed(e.to_string()))?;
        if input.format_version != RISK_FORMAT_VERSION {
            return Err(RiskError::Version(input.format_version));
        }
        Ok(input)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("risk documents always serialize");
        out.push('\n');
        out
    }

    pub fn km_per_segment(&self) -> f64 {
        self.km_per_segment.unwrap_or(DEFAULT_KM_PER_SEGMENT)
    }

    /// One exposure per network component. Lines without a geography entry
    /// split their length between their end areas; overrides then replace κ
    /// on the matching term.
    pub fn exposures(&self, network: &Network) -> Result<Vec<Exposure>, RiskError> {
        let km_per_segment = self.km_per_segment();
        let mut geography = std::collections::BTreeMap::new();
        for g in &self.line_geography {
            let component = ComponentRef::line(g.line_id);
            if !network.contains(component) {
                return Err(RiskError::UnknownComponent(component));
            }
            if geography.insert(g.line_id, g).is_some() {
                return Err(RiskError::DuplicateExposure(component));
            }
        }

        let mut out = Vec::with_capacity(network.component_count());
        for component in network.components() {
            let exposure = if component.kind == ComponentKind::Line {
                let line =
                    &network.lines()[network.line_idx(component.id).expect("listed by network")];
                match geography.get(&line.id) {
                    Some(g) => {
                        let lengths: Vec<_> =
                            g.segments.iter().map(|s| (s.area_id, s.km)).collect();
                        line_exposure(network, line, &lengths, km_per_segment)?
                    }
                    None => default_line_exposure(network, line, km_per_segment)?,
                }
            } else {
                point_exposure(network, component)?
            };
            out.push(exposure);
        }

        for o in &self.kappa_overrides {
            let component = ComponentRef::new(o.kind, o.id);
            if !network.contains(component) {
                return Err(RiskError::UnknownComponent(component));
            }
            if !(o.kappa.is_finite() && o.kappa >= 0.0) {
                return Err(RiskError::Negative {
                    what: format!("kappa of {component}"),
                    value: o.kappa,
                });
            }
            let exposure = out
                .iter_mut()
                .find(|e| e.component == component)
                .expect("every component has an exposure");
            let term = exposure
                .terms
                .iter_mut()
                .find(|t| t.area_id == o.area_id)
                .ok_or(RiskError::OverrideArea {
                    component,
                    area_id: o.area_id,
                })?;
            term.kappa = o.kappa;
        }
        Ok(out)
    }

    pub fn build_table(&self, network: &Network) -> Result<RiskTable, RiskError> {
        let exposures = self.exposures(network)?;
        build_risk_table(network, &self.area_risks, &exposures, false)
    }
}
