//! Checkpoint container: model dimensions, node ordering, every parameter
//! array, the hidden state with its window-start timestamp, and the fitted
//! normalization bounds. Serialized as a single self-describing JSON
//! document with a format tag; saving, loading and saving again produces
//! byte-identical output.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};
use crate::model::ModelParams;

pub const CHECKPOINT_FORMAT: &str = "grnn-checkpoint-v1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatData {
    pub fn from_array(a: &Array2<f64>) -> Self {
        Self {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().copied().collect(),
        }
    }

    pub fn to_array(&self) -> Result<Array2<f64>> {
        Array2::from_shape_vec((self.rows, self.cols), self.data.clone())
            .map_err(|e| GrnnError::Validation(format!("bad matrix payload: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamsData {
    pub w: MatData,
    pub u: MatData,
    pub w_z: MatData,
    pub u_z: MatData,
    pub b_z: MatData,
    pub w_r: MatData,
    pub u_r: MatData,
    pub b_r: MatData,
    pub w_o: MatData,
    pub b_o: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HiddenData {
    /// Interval index of the window start this state corresponds to.
    pub timestamp: usize,
    /// Number of observations consumed so far; with `timestamp` this
    /// recovers the rolling window on resume.
    pub intervals_seen: usize,
    pub state: MatData,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NormalizerData {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    pub format: String,
    pub hidden_dim: usize,
    pub node_count: usize,
    pub input_dim: usize,
    pub alpha: f64,
    pub nodes: Vec<String>,
    pub params: ParamsData,
    pub hidden: HiddenData,
    pub normalizer: Option<NormalizerData>,
}

impl Checkpoint {
    pub fn params_to_model(&self) -> Result<ModelParams> {
        let mut m = ModelParams::zeros(self.hidden_dim, self.node_count, self.input_dim)?;
        m.w = self.params.w.to_array()?;
        m.u = self.params.u.to_array()?;
        m.w_z = self.params.w_z.to_array()?;
        m.u_z = self.params.u_z.to_array()?;
        m.b_z = self.params.b_z.to_array()?;
        m.w_r = self.params.w_r.to_array()?;
        m.u_r = self.params.u_r.to_array()?;
        m.b_r = self.params.b_r.to_array()?;
        m.w_o = self.params.w_o.to_array()?;
        m.b_o = Array1::from_vec(self.params.b_o.clone());
        if m.w.dim() != (self.hidden_dim, self.input_dim)
            || m.b_z.dim() != (self.hidden_dim, self.node_count)
            || m.b_o.len() != self.node_count
        {
            return Err(GrnnError::Validation(
                "checkpoint arrays disagree with declared dimensions".into(),
            ));
        }
        if !m.all_finite() {
            return Err(GrnnError::Numeric(
                "checkpoint holds non-finite parameters".into(),
            ));
        }
        Ok(m)
    }

    pub fn params_from_model(params: &ModelParams) -> ParamsData {
        ParamsData {
            w: MatData::from_array(&params.w),
            u: MatData::from_array(&params.u),
            w_z: MatData::from_array(&params.w_z),
            u_z: MatData::from_array(&params.u_z),
            b_z: MatData::from_array(&params.b_z),
            w_r: MatData::from_array(&params.w_r),
            u_r: MatData::from_array(&params.u_r),
            b_r: MatData::from_array(&params.b_r),
            w_o: MatData::from_array(&params.w_o),
            b_o: params.b_o.to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(GrnnError::Validation(format!(
                "unsupported checkpoint format {:?}, expected {CHECKPOINT_FORMAT:?}",
                ckpt.format
            )));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
