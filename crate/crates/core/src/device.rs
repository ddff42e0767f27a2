//! Device description files: lengths in micrometres and frequencies in MHz,
//! converted to SI on load.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::mtl::{CoupledPairGeometry, LineParams, MtlCouplerParams};
use crate::mux::{MuxNetwork, QubitMeta, ReadoutChannel};
use crate::purcell::ShuntLC;
use crate::units::{mhz, um};

/// Bundled description of the four-channel reference device.
pub const REFERENCE_DEVICE_JSON: &str = include_str!("../data/paper_device.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub z0_ohm: f64,
    pub v_m_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuntSpec {
    pub c_f: f64,
    pub l_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplerSpec {
    Mtl {
        len_c_um: f64,
        /// Mutual capacitance per length, in F/mm.
        cm_f_per_mm: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        zm_over_z0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d_um: Option<f64>,
    },
    Capacitive {
        c_j_f: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub name: String,
    pub l_r_open_um: f64,
    pub l_r_short_um: f64,
    pub l_p_open_um: f64,
    pub l_p_short_um: f64,
    pub coupler: CouplerSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub name: String,
    pub f_r_g_mhz: f64,
    pub f_p_mhz: f64,
    pub j_mhz: f64,
    pub kappa_p_mhz: f64,
    pub chi_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma_r_mhz: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma_p_mhz: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSpec {
    pub channel: String,
    pub f_q_mhz: f64,
    pub alpha_mhz: f64,
    pub g_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_q_f: Option<f64>,
}

fn default_feedline() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub line: LineSpec,
    /// Impedance of the readout feedline (ohm).
    #[serde(default = "default_feedline")]
    pub feedline_z0_ohm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shunt: Option<ShuntSpec>,
    #[serde(default)]
    pub geometry: Vec<GeometrySpec>,
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
    #[serde(default)]
    pub qubits: Vec<QubitSpec>,
}

impl DeviceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let dev: Self =
            serde_json::from_str(text).map_err(|e| Error::validation("device", e.to_string()))?;
        dev.validate()?;
        Ok(dev)
    }

    pub fn reference() -> Self {
        Self::from_json(REFERENCE_DEVICE_JSON).expect("bundled device file is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.line_params()?;
        require_positive("feedline_z0_ohm", self.feedline_z0_ohm)?;
        self.shunt()?;
        let mut names = HashSet::new();
        for g in &self.geometry {
            if !names.insert(g.name.as_str()) {
                return Err(Error::validation(
                    "geometry",
                    format!("duplicate name {}", g.name),
                ));
            }
            self.build_geometry(g)?;
        }
        if !self.channels.is_empty() {
            self.network()?;
        }
        for (k, q) in self.qubits.iter().enumerate() {
            if !self.channels.iter().any(|c| c.name == q.channel) {
                return Err(Error::validation(
                    format!("qubits[{k}].channel"),
                    format!("no channel named {}", q.channel),
                ));
            }
            require_positive(&format!("qubits[{k}].f_q_mhz"), q.f_q_mhz)?;
            require_positive(&format!("qubits[{k}].g_mhz"), q.g_mhz)?;
            if let Some(c) = q.c_q_f {
                require_positive(&format!("qubits[{k}].c_q_f"), c)?;
            }
        }
        Ok(())
    }

    pub fn line_params(&self) -> Result<LineParams> {
        require_positive("line.z0_ohm", self.line.z0_ohm)?;
        require_positive("line.v_m_per_s", self.line.v_m_per_s)?;
        LineParams::new(self.line.z0_ohm, self.line.v_m_per_s)
    }

    pub fn shunt(&self) -> Result<Option<ShuntLC>> {
        self.shunt
            .as_ref()
            .map(|s| {
                require_positive("shunt.c_f", s.c_f)?;
                require_positive("shunt.l_h", s.l_h)?;
                ShuntLC::new(s.c_f, s.l_h)
            })
            .transpose()
    }

    fn build_geometry(&self, g: &GeometrySpec) -> Result<CoupledPairGeometry> {
        let field = |f: &str| format!("geometry.{}.{f}", g.name);
        for (name, v) in [
            ("l_r_open_um", g.l_r_open_um),
            ("l_r_short_um", g.l_r_short_um),
            ("l_p_open_um", g.l_p_open_um),
            ("l_p_short_um", g.l_p_short_um),
        ] {
            require_non_negative(&field(name), v)?;
        }
        let line = self.line_params()?;
        let (ro, rs, po, ps) = (
            um(g.l_r_open_um),
            um(g.l_r_short_um),
            um(g.l_p_open_um),
            um(g.l_p_short_um),
        );
        match &g.coupler {
            CouplerSpec::Mtl {
                len_c_um,
                cm_f_per_mm,
                zm_over_z0,
                d_um,
            } => {
                require_non_negative(&field("coupler.len_c_um"), *len_c_um)?;
                require_non_negative(&field("coupler.cm_f_per_mm"), *cm_f_per_mm)?;
                let mut p =
                    MtlCouplerParams::new(um(*len_c_um), cm_f_per_mm * 1e3 / line.c_per_len())
                        .map_err(|e| Error::validation(field("coupler"), e.to_string()))?;
                p.zm_over_z0 = *zm_over_z0;
                p.d = d_um.map(um);
                CoupledPairGeometry::mtl(ro, rs, po, ps, p, line)
            }
            CouplerSpec::Capacitive { c_j_f } => {
                require_non_negative(&field("coupler.c_j_f"), *c_j_f)?;
                CoupledPairGeometry::capacitive(ro, rs, po, ps, *c_j_f, line)
            }
        }
        .map_err(|e| match e {
            Error::Validation { field: f, reason } => {
                Error::validation(format!("geometry.{}.{f}", g.name), reason)
            }
            other => other,
        })
    }

    /// Geometry entry by name.
    pub fn geometry(&self, name: &str) -> Result<CoupledPairGeometry> {
        let g = self
            .geometry
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| Error::validation("pair", format!("no geometry named {name}")))?;
        self.build_geometry(g)
    }

    /// Readout network with qubit metadata attached to its channels.
    pub fn network(&self) -> Result<MuxNetwork> {
        let channels = self
            .channels
            .iter()
            .map(|c| {
                let qubit = self
                    .qubits
                    .iter()
                    .find(|q| q.channel == c.name)
                    .map(|q| QubitMeta {
                        f_q: mhz(q.f_q_mhz),
                        g: mhz(q.g_mhz),
                        alpha: mhz(q.alpha_mhz),
                    });
                ReadoutChannel {
                    name: c.name.clone(),
                    f_r_g: mhz(c.f_r_g_mhz),
                    chi: mhz(c.chi_mhz),
                    f_p: mhz(c.f_p_mhz),
                    j: mhz(c.j_mhz),
                    kappa_p: mhz(c.kappa_p_mhz),
                    gamma_r: mhz(c.gamma_r_mhz),
                    gamma_p: mhz(c.gamma_p_mhz),
                    qubit,
                }
            })
            .collect();
        MuxNetwork::new(channels, self.shunt()?, self.feedline_z0_ohm)
    }

    /// Qubit capacitance of a channel, if given.
    pub fn qubit_capacitance(&self, channel: &str) -> Option<f64> {
        self.qubits
            .iter()
            .find(|q| q.channel == channel)
            .and_then(|q| q.c_q_f)
    }

    /// Replaces the channel parameters with those of a fitted network.
    pub fn with_network(&self, net: &MuxNetwork) -> Self {
        let mut out = self.clone();
        out.channels = net
            .channels
            .iter()
            .map(|c| ChannelSpec {
                name: c.name.clone(),
                f_r_g_mhz: c.f_r_g / 1e6,
                f_p_mhz: c.f_p / 1e6,
                j_mhz: c.j / 1e6,
                kappa_p_mhz: c.kappa_p / 1e6,
                chi_mhz: c.chi / 1e6,
                gamma_r_mhz: c.gamma_r / 1e6,
                gamma_p_mhz: c.gamma_p / 1e6,
            })
            .collect();
        out
    }
}
