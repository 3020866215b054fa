use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cell, NetworkInstance, UserEquipment};
use crate::Result;

/// On-disk scenario layout. Field order is the serialization order.
#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    cells: Vec<Cell>,
    ues: Vec<UserEquipment>,
    gain: Vec<Vec<f64>>,
    noise_power_w: f64,
    num_ru: u32,
    ru_bandwidth_hz: f64,
}

impl Serialize for NetworkInstance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScenarioFile {
            cells: self.cells.clone(),
            ues: self.ues.clone(),
            gain: self.gain_rows(),
            noise_power_w: self.noise_power,
            num_ru: self.num_ru,
            ru_bandwidth_hz: self.ru_bandwidth,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NetworkInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = ScenarioFile::deserialize(d)?;
        NetworkInstance::new(
            f.cells,
            f.ues,
            f.gain,
            f.noise_power_w,
            f.num_ru,
            f.ru_bandwidth_hz,
        )
        .map_err(serde::de::Error::custom)
    }
}

impl NetworkInstance {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{generate_hexnet, ScenarioConfig};
    use proptest::prelude::*;

    #[test]
    fn json_uses_documented_keys() {
        let net = generate_hexnet(&ScenarioConfig::desk(), 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&net.to_json().unwrap()).unwrap();
        for key in ["cells", "ues", "gain", "noise_power_w", "num_ru", "ru_bandwidth_hz"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["cells"][0].get("power_per_ru_w").is_some());
        assert_eq!(v["cells"][0]["kind"], "macro");
        assert!(v["ues"][0].get("demand_bps").is_some());
        assert_eq!(v["gain"].as_array().unwrap().len(), net.n_cells());
    }

    #[test]
    fn invalid_scenario_rejected_on_load() {
        let net = generate_hexnet(&ScenarioConfig::desk(), 1).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&net.to_json().unwrap()).unwrap();
        v["noise_power_w"] = serde_json::json!(0.0);
        assert!(NetworkInstance::from_json(&v.to_string()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn json_round_trip_is_lossless(seed in 0u64..10_000) {
            let net = generate_hexnet(&ScenarioConfig::desk(), seed).unwrap();
            let back = NetworkInstance::from_json(&net.to_json().unwrap()).unwrap();
            prop_assert_eq!(net, back);
        }
    }
}
