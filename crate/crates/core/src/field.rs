//! Field realizations on framed patches, their on-disk formats, and the
//! manifest that regenerates a sample from its spec and seed.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PatchGrid;
use crate::stats::SuperpositionSampler;
use crate::waves::{
    BesselPolarSpec, EuclideanWave, EuclideanWaveSpec, FieldSampler, HyperbolicWave, HyperbolicWaveSpec,
    InvariantSine,
};

/// How a sample was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FieldDescriptor {
    Euclidean(EuclideanWaveSpec),
    BesselPolar(BesselPolarSpec),
    Hyperbolic(HyperbolicWaveSpec),
    InvariantSine,
    /// Pull-back of a deterministic torus function.
    Lift { side: f64, mu: f64 },
    /// Unit-sphere superposition of the eigenfunctions in a torus window,
    /// read from base point number `read` of its function.
    Superposition { side: f64, lambda0: f64, delta: f64, read: u64 },
}

/// One realization of a field on a patch. Values are row-major with the first
/// frame axis as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub patch: PatchGrid,
    pub values: Vec<f64>,
    pub spec: FieldDescriptor,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    patch: PatchGrid,
    spec: FieldDescriptor,
    seed: u64,
    values: Vec<Vec<f64>>,
}

impl FieldSample {
    pub fn new(patch: PatchGrid, values: Vec<f64>, spec: FieldDescriptor, seed: u64) -> Result<Self> {
        if values.len() != patch.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {}x{} patch",
                values.len(),
                patch.resolution,
                patch.resolution
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric("field sample", format!("non-finite value at index {i}")));
        }
        Ok(Self { patch, values, spec, seed })
    }

    pub fn resolution(&self) -> usize {
        self.patch.resolution
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.patch.resolution + j]
    }

    pub fn center_value(&self) -> f64 {
        let m = self.patch.resolution / 2;
        self.at(m, m)
    }

    /// CSV with header `u1,u2,value`, one row per grid point.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "u1,u2,value")?;
        for (u, v) in self.patch.offsets().iter().zip(&self.values) {
            writeln!(w, "{},{},{}", u[0], u[1], v)?;
        }
        Ok(())
    }

    /// Reads the values column of a CSV written by [`FieldSample::write_csv`].
    pub fn read_csv_values(r: impl BufRead) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if n == 0 {
                if line.trim() != "u1,u2,value" {
                    return Err(Error::InvalidArgument(format!("unexpected CSV header {line:?}")));
                }
                continue;
            }
            let v = line
                .rsplit(',')
                .next()
                .and_then(|t| t.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("bad CSV row {}: {line:?}", n + 1)))?;
            out.push(v);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let n = self.patch.resolution;
        let doc = SampleJson {
            patch: self.patch.clone(),
            spec: self.spec.clone(),
            seed: self.seed,
            values: self.values.chunks(n).map(<[f64]>::to_vec).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SampleJson = serde_json::from_str(text)?;
        let values: Vec<f64> = doc.values.into_iter().flatten().collect();
        Self::new(doc.patch, values, doc.spec, doc.seed)
    }

    pub fn manifest(&self) -> SampleManifest {
        SampleManifest { spec: self.spec.clone(), patch: self.patch.clone(), seed: self.seed }
    }
}

/// Spec, patch and seed: enough to regenerate a sample bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub spec: FieldDescriptor,
    pub patch: PatchGrid,
    pub seed: u64,
}

impl SampleManifest {
    pub fn regenerate(&self) -> Result<FieldSample> {
        match &self.spec {
            FieldDescriptor::Euclidean(spec) => EuclideanWave::new(spec.clone())?.sample(&self.patch, self.seed),
            FieldDescriptor::BesselPolar(spec) => spec.sampler()?.sample(&self.patch, self.seed),
            FieldDescriptor::Hyperbolic(spec) => HyperbolicWave::new(spec.clone())?.sample(&self.patch, self.seed),
            FieldDescriptor::InvariantSine => InvariantSine.sample(&self.patch, self.seed),
            FieldDescriptor::Superposition { side, lambda0, delta, read } => {
                SuperpositionSampler::new(*side, *lambda0, *delta)?.draw(&self.patch, self.seed, *read)
            }
            FieldDescriptor::Lift { .. } => Err(Error::InvalidArgument(
                "lifted samples depend on an external torus function and cannot be regenerated".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointFrame;

    fn small() -> FieldSample {
        let patch = PatchGrid::new(PointFrame::origin(2), 1.0, 3).unwrap();
        let values = vec![0.1, -2.5, 1.0 / 3.0, 4.0, 5e-300, -0.0, 7.25, 1e22, std::f64::consts::PI];
        FieldSample::new(patch, values, FieldDescriptor::InvariantSine, 9).unwrap()
    }

    #[test]
    fn shape_and_finiteness_are_checked() {
        let patch = PatchGrid::new(PointFrame::origin(2), 1.0, 3).unwrap();
        assert!(FieldSample::new(patch.clone(), vec![0.0; 8], FieldDescriptor::InvariantSine, 0).is_err());
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(FieldSample::new(patch, v, FieldDescriptor::InvariantSine, 0).is_err());
    }

    #[test]
    fn csv_round_trips_exactly() {
        let s = small();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("u1,u2,value\n-1,-1,0.1\n"));
        let back = FieldSample::read_csv_values(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 9);
        for (a, b) in back.iter().zip(&s.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn json_round_trips_exactly() {
        let s = small();
        let back = FieldSample::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.values[5].to_bits(), (-0.0f64).to_bits());
    }
}
