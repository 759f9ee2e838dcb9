//! Model persistence: a single JSON document with a readable header and
//! base64-encoded little-endian float64 payloads for the data and the dual
//! weights. Serialization is deterministic, so refitting with an equal
//! configuration produces a byte-identical document.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::reference::ReferenceSpec;
use crate::solver::{FittedPotential, SolveLog};

const FORMAT: &str = "mkq-potential-v1";

#[derive(Serialize, Deserialize)]
struct PotentialDoc {
    format: String,
    n: usize,
    d: usize,
    epsilon: f64,
    reference: ReferenceSpec,
    log: SolveLog,
    /// Row-major n*d float64 array, little-endian, base64.
    data: String,
    /// Length-n float64 array, little-endian, base64.
    weights: String,
}

fn encode_f64s(xs: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    B64.encode(bytes)
}

fn decode_f64s(s: &str, expect: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = B64
        .decode(s)
        .map_err(|e| Error::data(format!("invalid base64 in {what}: {e}")))?;
    if bytes.len() != expect * 8 {
        return Err(Error::data(format!(
            "{what}: expected {} bytes, got {}",
            expect * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Serializes a fitted potential to the JSON document format.
pub fn to_json(fit: &FittedPotential) -> Result<String> {
    let doc = PotentialDoc {
        format: FORMAT.to_string(),
        n: fit.data().n(),
        d: fit.data().dim(),
        epsilon: fit.epsilon(),
        reference: *fit.reference(),
        log: fit.solve_log().clone(),
        data: encode_f64s(fit.data().as_flat()),
        weights: encode_f64s(fit.weights()),
    };
    serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::data(format!("serialization failed: {e}")))
}

/// Parses a JSON document back into a fitted potential.
pub fn from_json(s: &str) -> Result<FittedPotential> {
    let doc: PotentialDoc =
        serde_json::from_str(s).map_err(|e| Error::data(format!("invalid model document: {e}")))?;
    if doc.format != FORMAT {
        return Err(Error::data(format!(
            "unsupported model format {:?}, expected {FORMAT:?}",
            doc.format
        )));
    }
    let flat = decode_f64s(&doc.data, doc.n * doc.d, "data payload")?;
    let weights = decode_f64s(&doc.weights, doc.n, "weight payload")?;
    let data = PointCloud::from_flat(doc.n, doc.d, flat)?;
    FittedPotential::from_parts(data, weights, doc.epsilon, doc.reference, doc.log)
}

pub fn save_potential(fit: &FittedPotential, path: &Path) -> Result<()> {
    fs::write(path, to_json(fit)?)?;
    Ok(())
}

pub fn load_potential(path: &Path) -> Result<FittedPotential> {
    let s = fs::read_to_string(path)?;
    from_json(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_semidual, SolveOptions};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn fitted() -> FittedPotential {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let flat: Vec<f64> = (0..60).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let data = PointCloud::from_flat(30, 2, flat).unwrap();
        let opts = SolveOptions {
            iterations: 200,
            reference_points: Some(400),
            seed: 78,
            ..SolveOptions::default()
        };
        solve_semidual(data, ReferenceSpec::spherical(2).unwrap(), 0.2, &opts).unwrap()
    }

    #[test]
    fn roundtrip_preserves_evaluations() {
        let fit = fitted();
        let loaded = from_json(&to_json(&fit).unwrap()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(79);
        for _ in 0..100 {
            let u: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 1.8 - 0.9).collect();
            assert_eq!(fit.quantile(&u).unwrap(), loaded.quantile(&u).unwrap());
            assert_eq!(fit.potential(&u).unwrap(), loaded.potential(&u).unwrap());
        }
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = to_json(&fitted()).unwrap();
        let b = to_json(&fitted()).unwrap();
        assert_eq!(a, b);
        // A fit-load-save cycle is also byte-stable.
        let c = to_json(&from_json(&a).unwrap()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn rejects_corrupt_documents() {
        assert!(from_json("{}").is_err());
        assert!(from_json("not json").is_err());
        let good = to_json(&fitted()).unwrap();
        let wrong_format = good.replace(FORMAT, "mkq-potential-v0");
        assert!(from_json(&wrong_format).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = std::env::temp_dir().join("mkq-persist-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        let fit = fitted();
        save_potential(&fit, &path).unwrap();
        let loaded = load_potential(&path).unwrap();
        assert_eq!(fit.weights(), loaded.weights());
        std::fs::remove_file(&path).ok();
    }
}
