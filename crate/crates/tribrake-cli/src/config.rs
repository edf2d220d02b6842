use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("{field}: {msg}")]
    Invalid { field: &'static str, msg: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    /// potential-grid: points per axis on [-1, 1]^2 (points outside the disk are skipped)
    pub n: usize,
    /// image-scan latitude rows
    pub n_lat: usize,
    /// image-scan longitude columns
    pub n_lon: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { n: 101, n_lat: 20, n_lon: 36 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrateParams {
    /// brake start shape (x, y)
    pub start: [f64; 2],
    /// physical time to integrate for
    pub t_end: f64,
}

impl Default for IntegrateParams {
    fn default() -> Self {
        Self { start: [0.1, 0.2], t_end: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SyzygyParams {
    /// random brake starts for syzygy-map
    pub samples: usize,
    /// excluded radius around the origin and the collision points
    pub exclusion: f64,
    /// horizon in rescaled time
    pub s_horizon: f64,
    pub collision_guard: f64,
}

impl Default for SyzygyParams {
    fn default() -> Self {
        Self { samples: 1000, exclusion: 0.02, s_horizon: 1e3, collision_guard: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WindingParams {
    pub radius: f64,
    pub samples: usize,
    pub reversed: bool,
}

impl Default for WindingParams {
    fn default() -> Self {
        Self { radius: 0.05, samples: 64, reversed: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SpiralParams {
    /// subdivisions of the mass simplex
    pub simplex_n: usize,
}

impl Default for SpiralParams {
    fn default() -> Self {
        Self { simplex_n: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct IsoParams {
    pub m3: f64,
    /// bracket for the admissibility threshold search
    pub threshold_bracket: Option<[f64; 2]>,
    pub threshold_tol: f64,
    /// shooting grid size
    pub scan_n: usize,
}

impl Default for IsoParams {
    fn default() -> Self {
        Self { m3: 1.0, threshold_bracket: None, threshold_tol: 1e-4, scan_n: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct JmParams {
    /// start point (r, x, y); r = 0 is the triple-collision limit
    pub start: [f64; 3],
    /// fixed end point (r, x, y); absent means the end lies on the Hill boundary
    pub end: Option<[f64; 3]>,
    pub nodes: usize,
    pub multistarts: usize,
    pub grad_tol: f64,
}

impl Default for JmParams {
    fn default() -> Self {
        Self { start: [0.0, 0.3, 0.2], end: None, nodes: 100, multistarts: 8, grad_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SeifertParams {
    /// shape under the boundary point
    pub shape: [f64; 2],
    /// smallest physical time
    pub t0: f64,
    pub levels: usize,
}

impl Default for SeifertParams {
    fn default() -> Self {
        Self { shape: [0.2, 0.1], t0: 1e-4, levels: 4 }
    }
}

/// Run configuration, read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub masses: [f64; 3],
    pub h: f64,
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub integrate: IntegrateParams,
    #[serde(default)]
    pub syzygy: SyzygyParams,
    #[serde(default)]
    pub winding: WindingParams,
    #[serde(default)]
    pub spiral: SpiralParams,
    #[serde(default)]
    pub iso: IsoParams,
    #[serde(default)]
    pub jm: JmParams,
    #[serde(default)]
    pub seifert: SeifertParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            masses: [1.0, 1.0, 1.0],
            h: 1.0,
            seed: 0,
            tolerances: Tolerances::default(),
            grid: GridParams::default(),
            integrate: IntegrateParams::default(),
            syzygy: SyzygyParams::default(),
            winding: WindingParams::default(),
            spiral: SpiralParams::default(),
            iso: IsoParams::default(),
            jm: JmParams::default(),
            seifert: SeifertParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Schema { path, msg: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field, msg: &str| Err(ConfigError::Invalid { field, msg: msg.to_string() });
        if self.masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return bad("masses", "all masses must be positive and finite");
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return bad("h", "must be positive");
        }
        for (field, v) in [("tolerances.rtol", self.tolerances.rtol), ("tolerances.atol", self.tolerances.atol)] {
            if !(1e-14..=1e-4).contains(&v) {
                return Err(ConfigError::Invalid { field, msg: format!("{v} is outside [1e-14, 1e-4]") });
            }
        }
        if !(1e-14..=1e-4).contains(&self.jm.grad_tol) {
            return bad("jm.grad_tol", "outside [1e-14, 1e-4]");
        }
        if !(self.iso.m3 > 0.0) {
            return bad("iso.m3", "must be positive");
        }
        if self.jm.nodes < 4 {
            return bad("jm.nodes", "need at least 4 nodes");
        }
        if self.winding.samples < 8 {
            return bad("winding.samples", "need at least 8 samples");
        }
        if self.seifert.levels < 3 {
            return bad("seifert.levels", "need at least 3 levels");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::from_json(r#"{"masses": [1, 2, 10], "h": 1, "seed": 3}"#).unwrap();
        assert_eq!(c.masses, [1.0, 2.0, 10.0]);
        assert_eq!(c.grid.n_lat, 20);
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn seed_is_required() {
        let e = RunConfig::from_json(r#"{"masses": [1, 1, 1], "h": 1}"#).unwrap_err();
        assert!(e.to_string().contains("seed"), "{e}");
    }

    #[test]
    fn unknown_fields_name_their_path() {
        let e = RunConfig::from_json(r#"{"masses": [1, 1, 1], "h": 1, "seed": 0, "iso": {"m4": 2}}"#).unwrap_err();
        assert!(e.to_string().starts_with("iso"), "{e}");
    }

    #[test]
    fn ranges_are_checked() {
        assert!(RunConfig::from_json(r#"{"masses": [1, 0, 1], "h": 1, "seed": 0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"masses": [1, 1, 1], "h": -1, "seed": 0}"#).is_err());
        let e = RunConfig::from_json(r#"{"masses": [1, 1, 1], "h": 1, "seed": 0, "tolerances": {"rtol": 1e-2, "atol": 1e-12}}"#).unwrap_err();
        assert!(e.to_string().contains("tolerances.rtol"));
    }

    #[test]
    fn hash_is_stable() {
        let a = RunConfig::default();
        assert_eq!(a.hash(), a.clone().hash());
        let b = RunConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
    }
}
