//! Cycle-accurate model of the line-topology broadcast NoC.
//!
//! Slope/bias pairs never sit in per-PE storage. Router 0 injects them as
//! flits of 8 pairs plus one tag bit, and they sweep the line once per wave.
//! Each router compares its PE outputs against the breakpoints, matches the
//! resulting lookup addresses against passing flits, and feeds the matched
//! pair to its MAC on the following base cycle.
//!
//! Addresses are 1-based segment indices. On the wire a router uses the
//! zero-based code `address - 1`. With one wave the whole code is the slot
//! index. With two waves the code's LSB selects the wave (compared against
//! the tag) and the remaining bits select the slot.
//!
//! Routers are grouped into segments of `max_single_cycle_hops`. A flit
//! crosses a whole segment in one NoC cycle through the clockless
//! repeaters. It is latched at the head of the next segment and continues
//! on the following cycle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{FixedPointFormat, Word};
use crate::pwl::{PiecewiseLinearFn, MAX_HW_BREAKPOINTS};

/// Slope/bias pairs carried by one flit.
pub const LINK_PAIRS: usize = 8;

/// On-wire width of a flit with 16-bit words.
pub const FLIT_WIRE_BITS: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SlopeBias {
    pub slope: Word,
    pub bias: Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BroadcastFlit {
    pub pairs: [SlopeBias; LINK_PAIRS],
    pub tag: u8,
    /// Schedule bookkeeping, not on the wire.
    pub wave_index: usize,
    /// Waves in the schedule this flit belongs to (mapper-configured in the
    /// routers, not on the wire).
    pub wave_count: usize,
}

impl BroadcastFlit {
    /// `8 * 2 * word_bits + 1` tag bit.
    pub fn wire_bits(fmt: &FixedPointFormat) -> usize {
        2 * LINK_PAIRS * fmt.total_bits as usize + 1
    }

    /// Packs the flit LSB-first: pair `k` holds slope then bias, each
    /// `total_bits` wide; the tag is the final bit.
    pub fn encode(&self, fmt: &FixedPointFormat) -> Vec<u8> {
        let bits = Self::wire_bits(fmt);
        let mut out = vec![0u8; bits.div_ceil(8)];
        let w = fmt.total_bits as usize;
        let mut put = |offset: usize, value: u64, width: usize| {
            for i in 0..width {
                if (value >> i) & 1 == 1 {
                    let bit = offset + i;
                    out[bit / 8] |= 1 << (bit % 8);
                }
            }
        };
        for (k, p) in self.pairs.iter().enumerate() {
            put(2 * k * w, fmt.to_raw_bits(p.slope), w);
            put((2 * k + 1) * w, fmt.to_raw_bits(p.bias), w);
        }
        put(bits - 1, self.tag as u64, 1);
        out
    }

    /// Inverse of [`BroadcastFlit::encode`]; bookkeeping fields come back zeroed.
    pub fn decode(bytes: &[u8], fmt: &FixedPointFormat) -> Result<Self> {
        let bits = Self::wire_bits(fmt);
        if bytes.len() != bits.div_ceil(8) {
            return Err(Error::Protocol(format!(
                "flit needs {} bytes, got {}",
                bits.div_ceil(8),
                bytes.len()
            )));
        }
        let w = fmt.total_bits as usize;
        let get = |offset: usize, width: usize| -> u64 {
            (0..width).fold(0u64, |acc, i| {
                let bit = offset + i;
                acc | (((bytes[bit / 8] >> (bit % 8)) & 1) as u64) << i
            })
        };
        let mut pairs = [SlopeBias::default(); LINK_PAIRS];
        for (k, p) in pairs.iter_mut().enumerate() {
            p.slope = fmt.from_raw_bits(get(2 * k * w, w));
            p.bias = fmt.from_raw_bits(get((2 * k + 1) * w, w));
        }
        Ok(Self {
            pairs,
            tag: get(bits - 1, 1) as u8,
            wave_index: 0,
            wave_count: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NovaNocConfig {
    pub num_routers: usize,
    pub neurons_per_router: usize,
    pub link_pairs_per_cycle: usize,
    pub base_freq_mhz: f64,
    pub noc_freq_multiplier: usize,
    pub max_single_cycle_hops: usize,
    pub repeater_spacing_mm: f64,
    /// Comparator/MAC lanes each router serves per base cycle.
    pub lanes_per_cycle: usize,
}

impl Default for NovaNocConfig {
    fn default() -> Self {
        Self {
            num_routers: 8,
            neurons_per_router: 1,
            link_pairs_per_cycle: LINK_PAIRS,
            base_freq_mhz: 1000.0,
            noc_freq_multiplier: 1,
            max_single_cycle_hops: 10,
            repeater_spacing_mm: 1.0,
            lanes_per_cycle: 1,
        }
    }
}

impl NovaNocConfig {
    /// The config with the frequency multiplier the mapper picks for `pwl`.
    pub fn mapped_for(mut self, pwl: &PiecewiseLinearFn) -> Self {
        self.noc_freq_multiplier = pwl.len().div_ceil(LINK_PAIRS);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.num_routers, "num_routers"),
            (self.neurons_per_router, "neurons_per_router"),
            (self.noc_freq_multiplier, "noc_freq_multiplier"),
            (self.max_single_cycle_hops, "max_single_cycle_hops"),
            (self.lanes_per_cycle, "lanes_per_cycle"),
        ];
        for (v, name) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.link_pairs_per_cycle != LINK_PAIRS {
            return Err(Error::Config(format!(
                "link carries exactly {LINK_PAIRS} pairs per cycle, got {}",
                self.link_pairs_per_cycle
            )));
        }
        if !(self.base_freq_mhz > 0.0 && self.base_freq_mhz.is_finite()) {
            return Err(Error::Config("base_freq_mhz must be positive".into()));
        }
        if !(self.repeater_spacing_mm > 0.0 && self.repeater_spacing_mm.is_finite()) {
            return Err(Error::Config("repeater_spacing_mm must be positive".into()));
        }
        Ok(())
    }

    /// Checks the config against the schedule for a loaded PWL.
    pub fn validate_for(&self, pwl: &PiecewiseLinearFn) -> Result<()> {
        self.validate()?;
        let waves = wave_count(pwl.len())?;
        if self.noc_freq_multiplier != waves {
            return Err(Error::Config(format!(
                "noc_freq_multiplier is {} but {} breakpoints need {waves}",
                self.noc_freq_multiplier,
                pwl.len()
            )));
        }
        Ok(())
    }

    /// Buffered segments a flit crosses, one NoC cycle each.
    pub fn traversal_segments(&self) -> usize {
        self.num_routers.div_ceil(self.max_single_cycle_hops)
    }

    pub fn single_cycle_traversal(&self) -> bool {
        self.num_routers <= self.max_single_cycle_hops
    }

    pub fn noc_freq_mhz(&self) -> f64 {
        self.base_freq_mhz * self.noc_freq_multiplier as f64
    }

    /// `(noc_cycles, base_cycles)` from first injection of a lane batch to
    /// its MAC result: the last wave leaves router 0 `waves - 1` cycles after
    /// the first and needs one NoC cycle per segment. Lookup completes on the
    /// base-cycle boundary that follows, then the MAC takes one base cycle.
    pub fn transaction_latency(&self, waves: usize) -> (usize, usize) {
        let noc = waves - 1 + self.traversal_segments();
        (noc, noc.div_ceil(self.noc_freq_multiplier) + 1)
    }
}

/// Flits per lookup for `breakpoints` segments.
pub fn wave_count(breakpoints: usize) -> Result<usize> {
    if breakpoints == 0 || breakpoints > MAX_HW_BREAKPOINTS {
        return Err(Error::UnsupportedBreakpointCount { count: breakpoints });
    }
    Ok(breakpoints.div_ceil(LINK_PAIRS))
}

/// `(tag, slot)` carrying 1-based `address` in a schedule of `waves` flits.
pub fn wave_slot(address: usize, waves: usize) -> Result<(u8, usize)> {
    if address == 0 {
        return Err(Error::Protocol("lookup addresses start at 1".into()));
    }
    let code = address - 1;
    let (tag, slot) = match waves {
        1 => (0, code),
        2 => ((code & 1) as u8, code >> 1),
        _ => return Err(Error::Protocol(format!("a single tag bit cannot select among {waves} waves"))),
    };
    if slot >= LINK_PAIRS {
        return Err(Error::Protocol(format!(
            "address {address} maps to slot {slot}, beyond the {LINK_PAIRS}-pair link"
        )));
    }
    Ok((tag, slot))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveSchedule {
    pub flits: Vec<BroadcastFlit>,
    pub noc_freq_multiplier: usize,
    pub breakpoints: usize,
    /// Comparator thresholds per breakpoint: input word `w` is right of
    /// breakpoint `i` iff `w >= thresholds[i]`.
    pub thresholds: Vec<i64>,
}

impl WaveSchedule {
    /// Comparator output: number of breakpoints at or left of `x`, at least 1.
    pub fn lookup_address(&self, x: Word) -> usize {
        self.thresholds.iter().filter(|&&t| x >= t).count().max(1)
    }
}

/// Mapper: packs the quantized slope/bias table into broadcast waves.
pub fn schedule_waves(pwl: &PiecewiseLinearFn, fmt: &FixedPointFormat) -> Result<WaveSchedule> {
    fmt.validate()?;
    let waves = wave_count(pwl.len())?;
    let mut flits: Vec<BroadcastFlit> = (0..waves)
        .map(|w| BroadcastFlit {
            pairs: [SlopeBias::default(); LINK_PAIRS],
            tag: w as u8,
            wave_index: w,
            wave_count: waves,
        })
        .collect();
    for (i, (slope, bias)) in pwl.quantized_coefficients(fmt).into_iter().enumerate() {
        let (tag, slot) = wave_slot(i + 1, waves)?;
        flits[tag as usize].pairs[slot] = SlopeBias { slope, bias };
    }
    Ok(WaveSchedule {
        flits,
        noc_freq_multiplier: waves,
        breakpoints: pwl.len(),
        thresholds: pwl.breakpoints().iter().map(|&d| fmt.threshold_word(d)).collect(),
    })
}

/// Tag match inside a router: the pair for `address` if this flit carries it.
pub fn router_match(flit: &BroadcastFlit, address: usize) -> Result<Option<SlopeBias>> {
    let (tag, slot) = wave_slot(address, flit.wave_count)?;
    Ok((tag == flit.tag).then_some(flit.pairs[slot]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortMode {
    /// East input latches the flit (segment head).
    Buffer,
    /// East input bypasses straight to the west output.
    Forward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouterState {
    pub position: usize,
    pub mode: PortMode,
    pub pending_addresses: Vec<usize>,
    pub matched: Vec<Option<SlopeBias>>,
}

impl RouterState {
    fn new(position: usize, cfg: &NovaNocConfig) -> Self {
        let mode = if position % cfg.max_single_cycle_hops == 0 {
            PortMode::Buffer
        } else {
            PortMode::Forward
        };
        Self {
            position,
            mode,
            pending_addresses: Vec::new(),
            matched: Vec::new(),
        }
    }

    fn load(&mut self, addresses: Vec<usize>) {
        self.matched = vec![None; addresses.len()];
        self.pending_addresses = addresses;
    }

    fn observe(&mut self, flit: &BroadcastFlit) -> Result<()> {
        for (lane, &address) in self.pending_addresses.iter().enumerate() {
            if let Some(pair) = router_match(flit, address)? {
                if self.matched[lane].is_some() {
                    return Err(Error::Protocol(format!(
                        "router {} lane {lane} matched twice in one transaction",
                        self.position
                    )));
                }
                self.matched[lane] = Some(pair);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlitEvent {
    /// Injection sequence number of the flit (across lane batches).
    pub wave: usize,
    pub router: usize,
    pub noc_cycle: usize,
}

#[derive(Debug, Clone)]
struct InFlight {
    seq: usize,
    batch: usize,
    flit: BroadcastFlit,
}

/// The line of routers: one latch per segment head.
struct LineNoc {
    num_routers: usize,
    hops: usize,
    latches: Vec<Option<InFlight>>,
}

impl LineNoc {
    fn new(cfg: &NovaNocConfig) -> Self {
        Self {
            num_routers: cfg.num_routers,
            hops: cfg.max_single_cycle_hops,
            latches: vec![None; cfg.traversal_segments()],
        }
    }

    fn idle(&self) -> bool {
        self.latches.iter().all(Option::is_none)
    }

    /// One NoC clock: `inject` enters at router 0; every latched flit
    /// sweeps its segment and is captured by the next segment head.
    fn step(&mut self, inject: Option<InFlight>, mut deliver: impl FnMut(usize, &InFlight)) {
        self.latches[0] = inject;
        let mut next = vec![None; self.latches.len()];
        for seg in 0..self.latches.len() {
            if let Some(f) = self.latches[seg].take() {
                let end = ((seg + 1) * self.hops).min(self.num_routers);
                for router in seg * self.hops..end {
                    deliver(router, &f);
                }
                if seg + 1 < next.len() {
                    next[seg + 1] = Some(f);
                }
            }
        }
        self.latches = next;
    }
}

/// Delivery trace of `flits` injected on consecutive NoC cycles.
pub fn route_broadcast(cfg: &NovaNocConfig, flits: &[BroadcastFlit]) -> Result<Vec<FlitEvent>> {
    cfg.validate()?;
    let mut noc = LineNoc::new(cfg);
    let mut events = Vec::new();
    let mut cycle = 0;
    let mut queue = flits.iter().enumerate();
    loop {
        let inject = queue.next().map(|(seq, f)| InFlight {
            seq,
            batch: 0,
            flit: f.clone(),
        });
        if inject.is_none() && noc.idle() {
            break;
        }
        noc.step(inject, |router, f| {
            events.push(FlitEvent {
                wave: f.seq,
                router,
                noc_cycle: cycle,
            })
        });
        cycle += 1;
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// `outputs[router][lane]`, fixed-point words.
    pub outputs: Vec<Vec<Word>>,
    /// Base cycles from comparator input to MAC output of one lane batch.
    pub base_cycles: usize,
    /// NoC cycles one lane batch keeps the link busy.
    pub noc_cycles: usize,
    pub noc_freq_multiplier: usize,
    pub lane_batches: usize,
    /// Base cycles for all lane batches, pipelined at one batch per cycle.
    pub total_base_cycles: usize,
    pub total_noc_cycles: usize,
    pub flit_events: Vec<FlitEvent>,
    /// Flits injected over the whole run.
    pub broadcast_count: usize,
}

impl SimResult {
    /// `wave,router,noc_cycle` lines with a header.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("wave,router,noc_cycle\n");
        for e in &self.flit_events {
            s.push_str(&format!("{},{},{}\n", e.wave, e.router, e.noc_cycle));
        }
        s
    }
}

/// Runs one approximation transaction over `inputs[router][lane]`.
///
/// Each lane batch is compared, looked up as its waves pass, and finished
/// by the MAC one base cycle later. Batch `b` starts injecting at NoC cycle
/// `b * noc_freq_multiplier`.
pub fn simulate_approximation(
    cfg: &NovaNocConfig,
    pwl: &PiecewiseLinearFn,
    inputs: &[Vec<f64>],
    fmt: &FixedPointFormat,
) -> Result<SimResult> {
    cfg.validate_for(pwl)?;
    if inputs.len() != cfg.num_routers {
        return Err(Error::Config(format!(
            "inputs cover {} routers, config has {}",
            inputs.len(),
            cfg.num_routers
        )));
    }
    if let Some(row) = inputs.iter().position(|r| r.len() > cfg.neurons_per_router) {
        return Err(Error::Config(format!(
            "router {row} has {} active lanes, only {} neurons per router",
            inputs[row].len(),
            cfg.neurons_per_router
        )));
    }
    let schedule = schedule_waves(pwl, fmt)?;
    let waves = schedule.flits.len();
    let mult = cfg.noc_freq_multiplier;
    let lanes_per_cycle = cfg.lanes_per_cycle;

    // PE output registers
    let words: Vec<Vec<Word>> = inputs
        .iter()
        .map(|row| row.iter().map(|&x| fmt.quantize(x)).collect())
        .collect();
    let max_lanes = words.iter().map(Vec::len).max().unwrap_or(0);
    let batches = max_lanes.div_ceil(lanes_per_cycle);

    let mut outputs: Vec<Vec<Word>> = words.iter().map(|r| vec![0; r.len()]).collect();
    let mut routers: Vec<Vec<RouterState>> = (0..cfg.num_routers)
        .map(|r| {
            (0..batches)
                .map(|b| {
                    let mut st = RouterState::new(r, cfg);
                    let lo = (b * lanes_per_cycle).min(words[r].len());
                    let hi = ((b + 1) * lanes_per_cycle).min(words[r].len());
                    st.load(words[r][lo..hi].iter().map(|&x| schedule.lookup_address(x)).collect());
                    st
                })
                .collect()
        })
        .collect();

    let injections = (0..batches).flat_map(|batch| schedule.flits.iter().map(move |f| (batch, f)));

    let mut noc = LineNoc::new(cfg);
    let mut events = Vec::new();
    let mut first_cycle = vec![usize::MAX; batches];
    let mut last_cycle = vec![0usize; batches];
    let mut error = None;
    let mut cycle = 0;
    let mut queue = injections.enumerate();
    loop {
        let inject = queue.next().map(|(seq, (batch, flit))| InFlight {
            seq,
            batch,
            flit: flit.clone(),
        });
        if inject.is_none() && noc.idle() {
            break;
        }
        noc.step(inject, |router, f| {
            events.push(FlitEvent {
                wave: f.seq,
                router,
                noc_cycle: cycle,
            });
            first_cycle[f.batch] = first_cycle[f.batch].min(cycle);
            last_cycle[f.batch] = last_cycle[f.batch].max(cycle);
            if let Err(e) = routers[router][f.batch].observe(&f.flit) {
                error.get_or_insert(e);
            }
        });
        if let Some(e) = error.take() {
            return Err(e);
        }
        cycle += 1;
    }

    // MAC stage
    for (r, states) in routers.iter().enumerate() {
        for (b, st) in states.iter().enumerate() {
            for (lane, pair) in st.matched.iter().enumerate() {
                let pair = pair.ok_or_else(|| {
                    Error::Protocol(format!(
                        "router {r} lane {} never matched address {}",
                        b * lanes_per_cycle + lane,
                        st.pending_addresses[lane]
                    ))
                })?;
                let idx = b * lanes_per_cycle + lane;
                outputs[r][idx] = fmt.mac(pair.slope, words[r][idx], pair.bias);
            }
        }
    }

    let noc_cycles = (0..batches)
        .map(|b| last_cycle[b] + 1 - b * mult)
        .max()
        .unwrap_or(0);
    let base_cycles = if batches == 0 { 0 } else { noc_cycles.div_ceil(mult) + 1 };
    let total_base_cycles = if batches == 0 { 0 } else { batches - 1 + base_cycles };
    debug_assert!(first_cycle.iter().enumerate().all(|(b, &c)| c == b * mult));
    Ok(SimResult {
        outputs,
        base_cycles,
        noc_cycles,
        noc_freq_multiplier: mult,
        lane_batches: batches,
        total_base_cycles,
        total_noc_cycles: cycle,
        flit_events: events,
        broadcast_count: batches * waves,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Throughput {
    pub base_cycles: usize,
    pub broadcast_count: usize,
    pub lane_batches: usize,
}

/// Steady-state cost of `num_queries` lookups, one lane batch per base
/// cycle across all routers.
pub fn throughput_model(cfg: &NovaNocConfig, pwl: &PiecewiseLinearFn, num_queries: u64) -> Result<Throughput> {
    cfg.validate_for(pwl)?;
    throughput_for(cfg, pwl.len(), num_queries)
}

/// [`throughput_model`] for any PWL with `breakpoints` segments.
pub fn throughput_for(cfg: &NovaNocConfig, breakpoints: usize, num_queries: u64) -> Result<Throughput> {
    cfg.validate()?;
    let waves = wave_count(breakpoints)?;
    if cfg.noc_freq_multiplier != waves {
        return Err(Error::Config(format!(
            "noc_freq_multiplier is {} but {breakpoints} breakpoints need {waves}",
            cfg.noc_freq_multiplier
        )));
    }
    let per_cycle = (cfg.num_routers * cfg.lanes_per_cycle) as u64;
    let batches = num_queries.div_ceil(per_cycle) as usize;
    if batches == 0 {
        return Ok(Throughput {
            base_cycles: 0,
            broadcast_count: 0,
            lane_batches: 0,
        });
    }
    let (_, latency) = cfg.transaction_latency(waves);
    Ok(Throughput {
        base_cycles: batches - 1 + latency,
        broadcast_count: batches * waves,
        lane_batches: batches,
    })
}
