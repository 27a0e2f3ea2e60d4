use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::io::{read_csv, write_csv, IoError};
use crate::plant::TrajectoryRecord;

use super::{Result, SysIdError};

/// Relative tolerance on the sampling interval.
pub const UNIFORM_SAMPLING_TOLERANCE: f64 = 1e-6;

/// A uniformly sampled record of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentLog {
    samples: Vec<TrajectoryRecord>,
    sample_rate: f64,
    pub metadata: BTreeMap<String, String>,
}

impl ExperimentLog {
    pub fn new(samples: Vec<TrajectoryRecord>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(SysIdError::InsufficientData {
                needed: 2,
                got: samples.len(),
            });
        }
        for (index, pair) in samples.windows(2).enumerate() {
            if !(pair[1].time > pair[0].time) {
                return Err(SysIdError::NonMonotonicTime { index: index + 1 });
            }
        }
        let first = samples[0].time;
        let last = samples[samples.len() - 1].time;
        let interval = (last - first) / (samples.len() - 1) as f64;
        for (index, pair) in samples.windows(2).enumerate() {
            let dt = pair[1].time - pair[0].time;
            if ((dt - interval) / interval).abs() > UNIFORM_SAMPLING_TOLERANCE {
                return Err(SysIdError::NonUniformSampling { index: index + 1 });
            }
        }
        Ok(Self {
            samples,
            sample_rate: 1.0 / interval,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_label(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn samples(&self) -> &[TrajectoryRecord] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Hz
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// s
    pub fn sample_interval(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn torque_in(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.torque_in).collect()
    }

    pub fn torque_out(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.torque_out).collect()
    }

    pub fn theta_in(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta_in).collect()
    }

    pub fn theta_out(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta_out).collect()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let rows: Vec<TrajectoryRecord> = read_csv(reader)?;
        Self::new(rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), IoError> {
        write_csv(writer, &self.samples)
    }
}
