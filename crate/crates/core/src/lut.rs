//! LUT-based vector-unit baselines.
//!
//! Both variants hold the slope/bias table in byte-addressed banks: one
//! single-ported copy per neuron, or one multi-ported bank shared by the
//! whole core. A lookup takes one cycle to fetch and one to MAC.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{FixedPointFormat, Word};
use crate::noc::SlopeBias;
use crate::pwl::PiecewiseLinearFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LutKind {
    PerNeuron,
    PerCore,
}

impl LutKind {
    pub fn name(self) -> &'static str {
        match self {
            LutKind::PerNeuron => "per_neuron",
            LutKind::PerCore => "per_core",
        }
    }
}

impl fmt::Display for LutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_neuron" => Ok(LutKind::PerNeuron),
            "per_core" => Ok(LutKind::PerCore),
            _ => Err(Error::Unknown {
                what: "LUT kind",
                name: s.to_string(),
                known: vec!["per_neuron".into(), "per_core".into()],
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LutConfig {
    pub kind: LutKind,
    /// Neurons (lookup lanes) served by one core.
    pub neurons: usize,
    #[serde(default = "default_bank_bytes")]
    pub bank_bytes: usize,
    pub ports: usize,
    pub base_freq_mhz: f64,
}

fn default_bank_bytes() -> usize {
    64
}

impl LutConfig {
    pub fn per_neuron(neurons: usize, base_freq_mhz: f64) -> Self {
        Self {
            kind: LutKind::PerNeuron,
            neurons,
            bank_bytes: default_bank_bytes(),
            ports: 1,
            base_freq_mhz,
        }
    }

    pub fn per_core(neurons: usize, ports: usize, base_freq_mhz: f64) -> Self {
        Self {
            kind: LutKind::PerCore,
            neurons,
            bank_bytes: default_bank_bytes(),
            ports,
            base_freq_mhz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.neurons == 0 || self.bank_bytes == 0 || self.ports == 0 {
            return Err(Error::Config("LUT neurons, bank_bytes and ports must be positive".into()));
        }
        if self.kind == LutKind::PerNeuron && self.ports != 1 {
            return Err(Error::Config("per-neuron LUT banks are single-ported".into()));
        }
        if !(self.base_freq_mhz > 0.0 && self.base_freq_mhz.is_finite()) {
            return Err(Error::Config("base_freq_mhz must be positive".into()));
        }
        Ok(())
    }

    /// Lookups one core can start per cycle.
    pub fn lookups_per_cycle(&self) -> usize {
        match self.kind {
            LutKind::PerNeuron => self.neurons,
            LutKind::PerCore => self.ports,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LutStats {
    /// Table storage in one core.
    pub total_bytes: usize,
    pub total_reads: usize,
    pub outputs: Vec<Vec<Word>>,
    pub base_cycles: usize,
}

/// A byte-addressed bank; entry `a` lives at `(a - 1) * entry_bytes`, slope
/// first, little-endian.
#[derive(Debug, Clone)]
struct LutBank {
    bytes: Vec<u8>,
    fmt: FixedPointFormat,
}

impl LutBank {
    fn entry_bytes(fmt: &FixedPointFormat) -> usize {
        2 * fmt.word_bytes()
    }

    fn program(bank_bytes: usize, fmt: FixedPointFormat, table: &[(Word, Word)]) -> Result<Self> {
        let needed = table.len() * Self::entry_bytes(&fmt);
        if needed > bank_bytes {
            return Err(Error::Capacity {
                needed,
                breakpoints: table.len(),
                bank_bytes,
            });
        }
        let wb = fmt.word_bytes();
        let mut bytes = vec![0u8; bank_bytes];
        for (i, &(slope, bias)) in table.iter().enumerate() {
            let base = i * Self::entry_bytes(&fmt);
            bytes[base..base + wb].copy_from_slice(&fmt.to_raw_bits(slope).to_le_bytes()[..wb]);
            bytes[base + wb..base + 2 * wb].copy_from_slice(&fmt.to_raw_bits(bias).to_le_bytes()[..wb]);
        }
        Ok(Self { bytes, fmt })
    }

    fn read(&self, address: usize) -> SlopeBias {
        let wb = self.fmt.word_bytes();
        let base = (address - 1) * Self::entry_bytes(&self.fmt);
        let word = |at: usize| {
            let mut raw = [0u8; 8];
            raw[..wb].copy_from_slice(&self.bytes[at..at + wb]);
            self.fmt.from_raw_bits(u64::from_le_bytes(raw))
        };
        SlopeBias {
            slope: word(base),
            bias: word(base + wb),
        }
    }
}

/// Storage footprint of one core.
pub fn lut_storage_stats(cfg: &LutConfig) -> Result<LutStats> {
    cfg.validate()?;
    let total_bytes = match cfg.kind {
        LutKind::PerNeuron => cfg.neurons * cfg.bank_bytes,
        LutKind::PerCore => cfg.bank_bytes,
    };
    Ok(LutStats {
        total_bytes,
        ..LutStats::default()
    })
}

/// One transaction over `inputs[core][lane]`, every core configured as `cfg`.
///
/// A per-core bank with fewer ports than active lanes serializes the
/// fetches, one per port per cycle; the MAC trails the last fetch by one
/// cycle.
pub fn simulate_lut(
    cfg: &LutConfig,
    pwl: &PiecewiseLinearFn,
    inputs: &[Vec<f64>],
    fmt: &FixedPointFormat,
) -> Result<LutStats> {
    cfg.validate()?;
    fmt.validate()?;
    let table = pwl.quantized_coefficients(fmt);
    let bank = LutBank::program(cfg.bank_bytes, *fmt, &table)?;
    if let Some(core) = inputs.iter().position(|r| r.len() > cfg.neurons) {
        return Err(Error::Config(format!(
            "core {core} has {} active lanes, LUT serves {} neurons",
            inputs[core].len(),
            cfg.neurons
        )));
    }
    // per-neuron replicas are programmed identically
    let banks: Vec<LutBank> = match cfg.kind {
        LutKind::PerNeuron => vec![bank; cfg.neurons],
        LutKind::PerCore => vec![bank],
    };
    let thresholds: Vec<i64> = pwl.breakpoints().iter().map(|&d| fmt.threshold_word(d)).collect();

    let mut reads = 0;
    let mut outputs = Vec::with_capacity(inputs.len());
    for row in inputs {
        let mut out = Vec::with_capacity(row.len());
        for (lane, &x) in row.iter().enumerate() {
            let xq = fmt.quantize(x);
            let address = thresholds.partition_point(|&t| t <= xq).max(1);
            let bank = &banks[lane % banks.len()];
            let pair = bank.read(address);
            reads += 1;
            out.push(fmt.mac(pair.slope, xq, pair.bias));
        }
        outputs.push(out);
    }
    let max_lanes = inputs.iter().map(Vec::len).max().unwrap_or(0);
    let fetch_cycles = max_lanes.div_ceil(cfg.lookups_per_cycle());
    Ok(LutStats {
        total_bytes: lut_storage_stats(cfg)?.total_bytes,
        total_reads: reads,
        outputs,
        base_cycles: if fetch_cycles == 0 { 0 } else { fetch_cycles + 1 },
    })
}

/// Base cycles for `num_queries` lookups spread over `cores`, the host
/// issuing at most `issue_per_cycle` lookups per core per cycle.
pub fn lut_throughput(cfg: &LutConfig, cores: usize, issue_per_cycle: usize, num_queries: u64) -> Result<usize> {
    cfg.validate()?;
    if cores == 0 || issue_per_cycle == 0 {
        return Err(Error::Config("cores and issue rate must be positive".into()));
    }
    let rate = (cores * issue_per_cycle.min(cfg.lookups_per_cycle())) as u64;
    let batches = num_queries.div_ceil(rate) as usize;
    Ok(if batches == 0 { 0 } else { batches + 1 })
}
