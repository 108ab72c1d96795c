use serde::{Deserialize, Serialize};

use super::{validate_fsc_with_tolerance, Fsc, FILE_TOL};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// JSON form of a channel: `{"nx", "ns", "ny", "kernel", "initial_state"}`
/// with `kernel[y][s_next][x][s]`. A missing `initial_state` means uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub nx: usize,
    pub ns: usize,
    pub ny: usize,
    pub kernel: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
}

impl ChannelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Validates at the file tolerance and checks the declared sizes.
    pub fn into_fsc<T: Real>(self) -> Result<Fsc<T>> {
        let conv = |v: f64| {
            T::from_f64(v).ok_or_else(|| Error::Parse(format!("{v} is not representable")))
        };
        let kernel = self
            .kernel
            .iter()
            .map(|a| {
                a.iter()
                    .map(|b| {
                        b.iter()
                            .map(|c| c.iter().map(|&v| conv(v)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<Vec<Vec<T>>>>>>()?;
        let init = match self.initial_state {
            Some(v) => v.into_iter().map(conv).collect::<Result<Vec<T>>>()?,
            None => vec![T::one() / T::count(self.ns.max(1)); self.ns],
        };
        let fsc = validate_fsc_with_tolerance(&kernel, &init, FILE_TOL)?;
        if (fsc.nx(), fsc.ns(), fsc.ny()) != (self.nx, self.ns, self.ny) {
            return Err(Error::DimensionMismatch(format!(
                "declared (nx, ns, ny) = ({}, {}, {}) but kernel has ({}, {}, {})",
                self.nx,
                self.ns,
                self.ny,
                fsc.nx(),
                fsc.ns(),
                fsc.ny()
            )));
        }
        Ok(fsc)
    }

    pub fn from_fsc<T: Real>(fsc: &Fsc<T>) -> Self {
        let kernel = (0..fsc.ny())
            .map(|y| {
                (0..fsc.ns())
                    .map(|sn| {
                        (0..fsc.nx())
                            .map(|x| {
                                (0..fsc.ns())
                                    .map(|s| fsc.prob(y, sn, x, s).as_f64())
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            nx: fsc.nx(),
            ns: fsc.ns(),
            ny: fsc.ny(),
            kernel,
            initial_state: Some(fsc.initial_state().iter().map(|p| p.as_f64()).collect()),
        }
    }
}
