//! Trajectory kernels.
//!
//! The exact kernel multiplies group elements at every step. The level
//! kernel applies when every generator has `lambda = beta^e`: it tracks the
//! integer level `K` with `lambda(X_t) = lambda(X_0) beta^K`, and for each
//! level the signed count of translation moves made there, since
//! `c(X_t) = c(X_0) + lambda(X_0) * sum_j d_j sum_K N[K][j] beta^K`. The
//! final element is rebuilt exactly once per trajectory. Both kernels read
//! the random stream identically, so they produce the same trajectories.
//!
//! The sojourn kernel handles the common case of one level move each way and
//! one translation pair, all equally likely, in aggregate per level. It has
//! the same law but different individual trajectories, and is only used
//! under `KernelChoice::Auto`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand_chacha::ChaCha8Rng;

use crate::fields::{LaurentRational, LogAbs, ValuedScalar};
use crate::groups::{AffineElement, GroupError, LabelingKind, MeasuredGroup};

use super::rng::{substream_rng, trajectory_rng, BitSource, WeightedSampler};
use super::{
    ExitSide, Height, Interval, KernelChoice, StopKind, StopRule, StoppedSample, WalkConfig,
    WalkError,
};

type Src = BitSource<ChaCha8Rng>;
type Stop = Option<(StopKind, Option<ExitSide>)>;

const FAR: i64 = 1 << 40;

/// A validated configuration with its per-run tables, reusable across
/// trajectory indices.
#[derive(Debug)]
pub struct PreparedWalk {
    cfg: WalkConfig,
    sampler: WeightedSampler,
    gens: Vec<AffineElement>,
    /// Label action table `act[label * n_gens + s]` for subgroup rules.
    act: Vec<u32>,
    start_label: u32,
    mode: Mode,
}

#[derive(Debug)]
enum Mode {
    Immediate(Stop),
    Exact,
    Level(Box<LevelPlan>),
}

#[derive(Debug)]
enum LevelRule {
    Exit { kmin: i64, kmax: i64 },
    Hit { ranges: Vec<(i64, i64)> },
    Subgroup,
}

#[derive(Debug)]
enum BaseKind {
    /// `beta = b`.
    Integer(BigInt),
    /// `beta = 1 / b`.
    InverseInteger(BigInt),
    /// `beta = coef * x^shift` over F_p.
    LaurentMonomial {
        coef: u32,
        shift: i64,
        p: u32,
    },
    General,
}

#[derive(Debug)]
struct LevelPlan {
    delta: Vec<i64>,
    class: Vec<usize>,
    sign: Vec<i64>,
    /// Translation classes; `d[0]` is the unused slot for moves with `c = 0`.
    d: Vec<ValuedScalar>,
    base: ValuedScalar,
    base_kind: BaseKind,
    rho0: LogAbs,
    log_base: LogAbs,
    rule: LevelRule,
    block: Option<BlockTable>,
    sojourn: Option<Sojourn>,
    d_is_one: Vec<bool>,
    lambda0_is_one: bool,
}

/// Tables for walks whose four equally likely generators are a level move
/// up, one down, and a `+d`/`-d` pair of translations (see `run_sojourn`).
#[derive(Debug)]
struct Sojourn {
    kmin: i64,
    kmax: i64,
    bytes: Vec<SojournByte>,
}

/// Net effect of the several steps encoded by one random byte, for walks
/// whose level moves by at most one per step.
#[derive(Debug, Clone, Copy, Default)]
struct BlockEntry {
    dk: i8,
    /// Range of the levels after each step of the block.
    lo: i8,
    hi: i8,
    /// Range of the levels before each step of the block.
    vis_lo: i8,
    vis_hi: i8,
    n: u8,
    /// `(level offset, class, signed count)`.
    contrib: [(i8, u8, i8); 8],
}

#[derive(Debug)]
struct BlockTable {
    bits: u32,
    steps: u64,
    entries: Vec<BlockEntry>,
}

impl BlockTable {
    fn build(
        sampler: &WeightedSampler,
        delta: &[i64],
        class: &[usize],
        sign: &[i64],
    ) -> Option<Self> {
        let bits = sampler.bits();
        let usable = sampler.is_rejection_free()
            && matches!(bits, 1 | 2 | 4 | 8)
            && delta.iter().all(|d| d.abs() <= 1)
            && class.iter().all(|&c| c < 256);
        if !usable {
            return None;
        }
        let steps = 8 / bits;
        let mask = (1u64 << bits) - 1;
        let entries = (0..256u64)
            .map(|byte| {
                let mut e = BlockEntry::default();
                let mut k = 0i64;
                let (mut lo, mut hi, mut vlo, mut vhi) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
                for i in 0..steps {
                    let s = sampler
                        .lookup((byte >> (bits * i)) & mask)
                        .expect("rejection free");
                    vlo = vlo.min(k);
                    vhi = vhi.max(k);
                    if sign[s] != 0 {
                        let key = (k as i8, class[s] as u8);
                        match e.contrib[..e.n as usize]
                            .iter_mut()
                            .find(|c| (c.0, c.1) == key)
                        {
                            Some(c) => c.2 += sign[s] as i8,
                            None => {
                                e.contrib[e.n as usize] = (key.0, key.1, sign[s] as i8);
                                e.n += 1;
                            }
                        }
                    }
                    k += delta[s];
                    lo = lo.min(k);
                    hi = hi.max(k);
                }
                let mut kept = 0;
                for i in 0..e.n as usize {
                    if e.contrib[i].2 != 0 {
                        e.contrib[kept] = e.contrib[i];
                        kept += 1;
                    }
                }
                for slot in &mut e.contrib[kept..] {
                    *slot = (0, 0, 0);
                }
                e.n = kept as u8;
                e.dk = k as i8;
                (e.lo, e.hi, e.vis_lo, e.vis_hi) = (lo as i8, hi as i8, vlo as i8, vhi as i8);
                e
            })
            .collect();
        Some(BlockTable {
            bits,
            steps: steps as u64,
            entries,
        })
    }
}

fn level_log(log_base: LogAbs, k: i64) -> LogAbs {
    match log_base {
        LogAbs::Exact { k: kb, base } => LogAbs::exact(k * kb, base),
        other => LogAbs::Float(k as f64 * other.to_f64()),
    }
}

impl LevelPlan {
    /// `rho` at level `k`, computed so that it agrees with `rho` of the
    /// rebuilt element.
    fn rho_at(&self, k: i64) -> f64 {
        (self.rho0 + (-level_log(self.log_base, k))).to_f64()
    }
}

/// The integer interval `{k : pred(k)}`, given that it is an interval close
/// to `[est_lo, est_hi]`.
fn level_range(pred: impl Fn(i64) -> bool, est_lo: f64, est_hi: f64) -> Option<(i64, i64)> {
    let clamp = |v: f64| {
        if v.is_nan() {
            0
        } else {
            v.clamp(-(FAR as f64), FAR as f64) as i64
        }
    };
    let mut a = clamp(est_lo.ceil());
    let mut b = clamp(est_hi.floor());
    for _ in 0..4 {
        if a > -FAR && pred(a - 1) {
            a -= 1;
        }
        if b < FAR && pred(b + 1) {
            b += 1;
        }
    }
    let mut guard = 0;
    while a <= b && !pred(a) && guard < 8 {
        a += 1;
        guard += 1;
    }
    guard = 0;
    while a <= b && !pred(b) && guard < 8 {
        b -= 1;
        guard += 1;
    }
    (a <= b && pred(a) && pred(b)).then_some((a, b))
}

fn height_of(h: Height, x: &AffineElement) -> f64 {
    match h {
        Height::Rho => x.rho().to_f64(),
        Height::Translation => x.c().to_f64().unwrap_or(f64::NAN),
    }
}

impl PreparedWalk {
    pub fn new(cfg: &WalkConfig) -> Result<Self, WalkError> {
        cfg.validate()?;
        let g = &cfg.group;
        let weights: Vec<u64> = g.generators().iter().map(|s| s.weight).collect();
        let sampler = WeightedSampler::new(&weights).ok_or_else(|| {
            GroupError::InvalidMeasure("total weight must stay below 2^20".into())
        })?;
        let gens = g.generators().iter().map(|s| s.element.clone()).collect();
        let mut act = Vec::new();
        let mut start_label = 0;
        if let StopRule::Subgroup(lab) = &cfg.stop {
            let n = g.generators().len();
            act = vec![0; lab.index() * n];
            for l in 0..lab.index() {
                for s in 0..n {
                    act[l * n + s] = lab.act(l, s) as u32;
                }
            }
            start_label = lab.label(&cfg.start)? as u32;
        }
        let mut out = PreparedWalk {
            cfg: cfg.clone(),
            sampler,
            gens,
            act,
            start_label,
            mode: Mode::Exact,
        };
        if let Some(stop) = out.check_exact(&cfg.start, 0, start_label) {
            out.mode = Mode::Immediate(Some(stop));
        } else if cfg.kernel != KernelChoice::Exact {
            if let Some(plan) = LevelPlan::build(cfg, &out.sampler)? {
                out.mode = Mode::Level(Box::new(plan));
            }
        }
        Ok(out)
    }

    pub fn config(&self) -> &WalkConfig {
        &self.cfg
    }

    /// Whether the integer level kernel is in use.
    pub fn uses_levels(&self) -> bool {
        matches!(self.mode, Mode::Level(_))
    }

    pub fn sample(&self, index: u64) -> StoppedSample {
        let mut src = BitSource::new(trajectory_rng(self.cfg.seed, self.cfg.domain, index));
        match &self.mode {
            Mode::Immediate(stop) => {
                let (kind, side) = stop.expect("immediate stop");
                StoppedSample {
                    stop_kind: kind,
                    stop_time: 0,
                    final_element: self.cfg.start.clone(),
                    exit_side: side,
                    visited: self.cfg.track_visits.then(Vec::new),
                }
            }
            Mode::Exact => self.run_exact(&mut src),
            Mode::Level(plan) if plan.sojourn.is_some() => {
                if self.cfg.track_visits {
                    self.run_sojourn::<true>(plan, index)
                } else {
                    self.run_sojourn::<false>(plan, index)
                }
            }
            Mode::Level(plan) if plan.block.is_some() => {
                if self.cfg.track_visits {
                    self.run_block::<true>(plan, &mut src)
                } else {
                    self.run_block::<false>(plan, &mut src)
                }
            }
            Mode::Level(plan) => {
                if self.cfg.track_visits {
                    self.run_level::<true>(plan, &mut src)
                } else {
                    self.run_level::<false>(plan, &mut src)
                }
            }
        }
    }

    fn check_exact(&self, x: &AffineElement, t: u64, label: u32) -> Stop {
        match &self.cfg.stop {
            StopRule::Exit { height, lo, hi } => {
                let h = height_of(*height, x);
                if Interval::closed(*lo, *hi).contains(h) {
                    None
                } else if h < *lo {
                    Some((StopKind::SigmaR, Some(ExitSide::Low)))
                } else {
                    Some((StopKind::SigmaR, Some(ExitSide::High)))
                }
            }
            StopRule::Hit { height, set } => {
                let h = height_of(*height, x);
                set.iter()
                    .any(|i| i.contains(h))
                    .then_some((StopKind::TauSet, None))
            }
            StopRule::Subgroup(_) => {
                (t >= 1 && label == 0).then_some((StopKind::TauSubgroup, None))
            }
        }
    }

    fn run_exact(&self, src: &mut Src) -> StoppedSample {
        let n = self.gens.len();
        let mut x = self.cfg.start.clone();
        let mut label = self.start_label;
        let mut visited = Vec::new();
        let height = self.cfg.stop.height().unwrap_or(Height::Rho);
        let mut outcome = None;
        let mut t = 0;
        while t < self.cfg.max_steps {
            if self.cfg.track_visits {
                visited.push(height_of(height, &x));
            }
            let s = self.sampler.sample(src);
            t += 1;
            x = x.mul(&self.gens[s]).expect("generators share the place");
            if !self.act.is_empty() {
                label = self.act[label as usize * n + s];
            }
            outcome = self.check_exact(&x, t, label);
            if outcome.is_some() {
                break;
            }
        }
        let (stop_kind, exit_side) = outcome.unwrap_or((StopKind::Censored, None));
        let visited = self.cfg.track_visits.then(|| {
            visited.sort_by(f64::total_cmp);
            visited.dedup();
            visited
        });
        StoppedSample {
            stop_kind,
            stop_time: t,
            final_element: x,
            exit_side,
            visited,
        }
    }

    fn run_level<const TRACK: bool>(&self, plan: &LevelPlan, src: &mut Src) -> StoppedSample {
        let n = self.gens.len();
        let nclass = plan.d.len();
        let mut acc = LevelAcc::new(nclass, TRACK);
        if let LevelRule::Exit { kmin, kmax } = plan.rule {
            if kmax - kmin < 1 << 20 {
                acc.reserve(kmin, kmax);
            }
        }
        let mut k = 0i64;
        let mut label = self.start_label;
        let mut t = 0u64;
        let mut outcome: Stop = None;
        while t < self.cfg.max_steps {
            if TRACK {
                acc.visit(k);
            }
            let s = self.sampler.sample(src);
            t += 1;
            acc.add(k, plan.class[s], plan.sign[s]);
            k += plan.delta[s];
            outcome = match &plan.rule {
                LevelRule::Exit { kmin, kmax } => {
                    if k < *kmin {
                        Some((StopKind::SigmaR, Some(ExitSide::High)))
                    } else if k > *kmax {
                        Some((StopKind::SigmaR, Some(ExitSide::Low)))
                    } else {
                        None
                    }
                }
                LevelRule::Hit { ranges } => ranges
                    .iter()
                    .any(|&(a, b)| a <= k && k <= b)
                    .then_some((StopKind::TauSet, None)),
                LevelRule::Subgroup => {
                    label = self.act[label as usize * n + s];
                    (label == 0).then_some((StopKind::TauSubgroup, None))
                }
            };
            if outcome.is_some() {
                break;
            }
        }
        let (stop_kind, exit_side) = outcome.unwrap_or((StopKind::Censored, None));
        let final_element = plan.rebuild(&self.cfg.start, &acc, k);
        let visited = TRACK.then(|| {
            let mut v: Vec<f64> = acc.visited_levels().map(|k| plan.rho_at(k)).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        });
        StoppedSample {
            stop_kind,
            stop_time: t,
            final_element,
            exit_side,
            visited,
        }
    }
}

impl PreparedWalk {
    /// Level kernel for interval exits, consuming one random byte per block
    /// of steps. Blocks that could leave the interval or pass the step cap
    /// are replayed one step at a time from the same byte.
    fn run_block<const TRACK: bool>(&self, plan: &LevelPlan, src: &mut Src) -> StoppedSample {
        let table = plan.block.as_ref().expect("block table");
        let LevelRule::Exit { kmin, kmax } = plan.rule else {
            unreachable!("block tables are built for exit rules only")
        };
        let nclass = plan.d.len();
        let mut acc = LevelAcc::new(nclass, false);
        acc.reserve(kmin, kmax);
        let off = acc.offset;
        let max_steps = self.cfg.max_steps;
        let mask = (1u64 << table.bits) - 1;
        let (mut k, mut t) = (0i64, 0u64);
        let (mut vis_lo, mut vis_hi) = (0i64, 0i64);
        let outcome: Stop = 'walk: loop {
            let byte = src.bits(8);
            let e = &table.entries[byte as usize];
            let safe =
                k + e.lo as i64 >= kmin && k + e.hi as i64 <= kmax && t + table.steps <= max_steps;
            if safe {
                // Unused slots hold (0, 0, 0): a no-op add to the spare class,
                // which keeps this loop free of data-dependent branches.
                for &(rel, class, val) in &e.contrib[..table.steps as usize] {
                    acc.counts[(k + rel as i64 - off) as usize * nclass + class as usize] +=
                        val as i64;
                }
                if TRACK {
                    vis_lo = vis_lo.min(k + e.vis_lo as i64);
                    vis_hi = vis_hi.max(k + e.vis_hi as i64);
                }
                k += e.dk as i64;
                t += table.steps;
                if t == max_steps {
                    break 'walk None;
                }
                continue;
            }
            for i in 0..table.steps {
                if TRACK {
                    vis_lo = vis_lo.min(k);
                    vis_hi = vis_hi.max(k);
                }
                let s = self
                    .sampler
                    .lookup((byte >> (table.bits as u64 * i)) & mask)
                    .expect("rejection free");
                t += 1;
                acc.counts[(k - off) as usize * nclass + plan.class[s]] += plan.sign[s];
                k += plan.delta[s];
                if k < kmin {
                    break 'walk Some((StopKind::SigmaR, Some(ExitSide::High)));
                }
                if k > kmax {
                    break 'walk Some((StopKind::SigmaR, Some(ExitSide::Low)));
                }
                if t == max_steps {
                    break 'walk None;
                }
            }
        };
        let (stop_kind, exit_side) = outcome.unwrap_or((StopKind::Censored, None));
        let final_element = plan.rebuild(&self.cfg.start, &acc, k);
        let visited = TRACK.then(|| {
            let mut v: Vec<f64> = (vis_lo..=vis_hi).map(|k| plan.rho_at(k)).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        });
        StoppedSample {
            stop_kind,
            stop_time: t,
            final_element,
            exit_side,
            visited,
        }
    }
}

impl Sojourn {
    fn detect(g: &MeasuredGroup, plan: &LevelPlan) -> Option<Self> {
        let LevelRule::Exit { kmin, kmax } = plan.rule else {
            return None;
        };
        if kmin > 0 || kmax < 0 || kmax - kmin > 1 << 24 {
            return None;
        }
        let gens = g.generators();
        if gens.len() != 4 || gens.iter().any(|s| s.weight != gens[0].weight) {
            return None;
        }
        let one = |pred: &dyn Fn(usize) -> bool| (0..4).filter(|&i| pred(i)).count() == 1;
        let (delta, class, sign) = (&plan.delta, &plan.class, &plan.sign);
        let roles = one(&|i| delta[i] == 1 && class[i] == 0)
            && one(&|i| delta[i] == -1 && class[i] == 0)
            && one(&|i| delta[i] == 0 && class[i] == 1 && sign[i] == 1)
            && one(&|i| delta[i] == 0 && class[i] == 1 && sign[i] == -1);
        if !roles {
            return None;
        }
        let mut bytes = vec![SojournByte::default(); 256];
        for (b, e) in bytes.iter_mut().enumerate() {
            let mut k = 0i8;
            let (mut lo, mut hi) = (i8::MAX, i8::MIN);
            for i in 0..8 {
                e.visits[(k + 7) as usize] += 1;
                k += if b >> i & 1 == 1 { 1 } else { -1 };
                lo = lo.min(k);
                hi = hi.max(k);
            }
            e.dk = k;
            e.lo = lo;
            e.hi = hi;
        }
        Some(Sojourn { kmin, kmax, bytes })
    }
}

/// Effect of eight level moves whose directions are the bits of a byte.
#[derive(Debug, Clone, Copy, Default)]
struct SojournByte {
    dk: i8,
    /// Range of the levels after each move.
    lo: i8,
    hi: i8,
    /// Visits to the levels `-7..=8` relative to the start, before each move.
    visits: [u32; 16],
}

/// Fair coins read sequentially from a trajectory stream.
struct Coins {
    rng: ChaCha8Rng,
    /// Unread coins in the low `left` bits; the rest are zero.
    word: u64,
    left: u32,
}

impl Coins {
    fn new(rng: ChaCha8Rng) -> Self {
        Coins {
            rng,
            word: 0,
            left: 0,
        }
    }

    #[inline]
    fn refill(&mut self) {
        self.word = rand_core::RngCore::next_u64(&mut self.rng);
        self.left = 64;
    }

    #[inline]
    fn consume(&mut self, n: u32) {
        self.word = if n == 64 { 0 } else { self.word >> n };
        self.left -= n;
    }

    /// The next `n <= 64` coins as the low bits of an integer, first coin lowest.
    #[inline]
    fn take(&mut self, n: u32) -> u64 {
        if n == 0 {
            return 0;
        }
        if self.left >= n {
            let v = if n == 64 {
                self.word
            } else {
                self.word & ((1u64 << n) - 1)
            };
            self.consume(n);
            return v;
        }
        let (low, have) = (self.word, self.left);
        self.refill();
        let high = self.take(n - have);
        low | high << have
    }

    #[inline]
    fn byte(&mut self) -> u8 {
        if self.left >= 8 {
            let v = self.word as u8;
            self.consume(8);
            v
        } else {
            self.take(8) as u8
        }
    }

    /// Number of tails before the `v`-th head.
    fn tails_before_heads(&mut self, v: u64) -> u64 {
        let (mut need, mut tails) = (v, 0u64);
        while need > 0 {
            if self.left == 0 {
                self.refill();
            }
            let heads = self.word.count_ones() as u64;
            if heads < need {
                need -= heads;
                tails += self.left as u64 - heads;
                self.consume(self.left);
                continue;
            }
            let used = select(self.word, need as u32 - 1) + 1;
            tails += used as u64 - need;
            self.consume(used);
            need = 0;
        }
        tails
    }

    /// Number of heads among the next `n` coins.
    #[inline]
    fn heads(&mut self, mut n: u64) -> u64 {
        if n <= self.left as u64 {
            return self.take(n as u32).count_ones() as u64;
        }
        let mut heads = self.word.count_ones() as u64;
        n -= self.left as u64;
        while n >= 64 {
            heads += rand_core::RngCore::next_u64(&mut self.rng).count_ones() as u64;
            n -= 64;
        }
        self.refill();
        heads + self.take(n as u32).count_ones() as u64
    }

    /// Uniform on `0..n`, by rejection.
    fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let bits = 64 - (n - 1).leading_zeros();
        loop {
            let v = self.take(bits);
            if v < n {
                return v;
            }
        }
    }

    fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            v.swap(i, j);
        }
    }
}

/// `SELECT_IN_BYTE[r << 8 | b]`: position of the set bit of rank `r` in `b`.
const SELECT_IN_BYTE: [u8; 2048] = {
    let mut t = [0u8; 2048];
    let mut b = 0;
    while b < 256 {
        let (mut r, mut i) = (0, 0);
        while i < 8 {
            if b >> i & 1 == 1 {
                t[r << 8 | b] = i as u8;
                r += 1;
            }
            i += 1;
        }
        b += 1;
    }
    t
};

/// Position of the set bit of rank `r` (from 0) in `w`; `w` must have more
/// than `r` set bits. Broadword byte ranking followed by a byte table.
#[inline]
fn select(w: u64, r: u32) -> u32 {
    const L8: u64 = 0x0101_0101_0101_0101;
    const H8: u64 = 0x8080_8080_8080_8080;
    let mut s = w - ((w >> 1) & 0x5555_5555_5555_5555);
    s = (s & 0x3333_3333_3333_3333) + ((s >> 2) & 0x3333_3333_3333_3333);
    s = (s + (s >> 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    let byte_sums = s.wrapping_mul(L8);
    let r8 = r as u64 * L8;
    let place = ((((r8 | H8) - byte_sums) & H8).count_ones() * 8) as u64;
    let byte_rank = r as u64 - (((byte_sums << 8) >> place) & 0xFF);
    place as u32 + SELECT_IN_BYTE[((w >> place) & 0xFF | byte_rank << 8) as usize] as u32
}

const SLOT_WORDS: usize = 8;
const TAG_LEVELS_UP: u64 = 1;
const TAG_LEVELS_DOWN: u64 = 2;
const TAG_OVERFLOW: u64 = 3;

/// Coins for the translation counts, per level. Levels `0, 1, 2, ...` and
/// `-1, -2, ...` take consecutive fixed-size slots of two streams, and a
/// level that runs out of its slot continues in its own region of a third.
/// The coins a level sees therefore do not depend on the exit interval,
/// which keeps exit times monotone in the interval on a fixed seed.
/// Levels must be drawn outward from 0 on each side.
struct LevelCoins {
    seed: u64,
    domain: u64,
    index: u64,
    up: ChaCha8Rng,
    down: ChaCha8Rng,
}

impl LevelCoins {
    fn new(cfg: &WalkConfig, index: u64) -> Self {
        LevelCoins {
            seed: cfg.seed,
            domain: cfg.domain,
            index,
            up: substream_rng(cfg.seed, cfg.domain, index, TAG_LEVELS_UP),
            down: substream_rng(cfg.seed, cfg.domain, index, TAG_LEVELS_DOWN),
        }
    }

    /// Tails before the `v`-th head in the coins of `level`.
    fn negbin(&mut self, level: i64, v: u64) -> u64 {
        let rng = if level >= 0 {
            &mut self.up
        } else {
            &mut self.down
        };
        let mut slot = [0u64; SLOT_WORDS];
        for w in &mut slot {
            *w = rand_core::RngCore::next_u64(rng);
        }
        let (mut need, mut tails) = (v, 0u64);
        for &w in &slot {
            if need == 0 {
                break;
            }
            let heads = w.count_ones() as u64;
            if heads < need {
                need -= heads;
                tails += 64 - heads;
            } else {
                tails += (select(w, need as u32 - 1) + 1) as u64 - need;
                need = 0;
            }
        }
        if need > 0 {
            let mut rng = substream_rng(self.seed, self.domain, self.index, TAG_OVERFLOW);
            let zigzag = if level >= 0 {
                2 * level as u128
            } else {
                2 * level.unsigned_abs() as u128 - 1
            };
            rng.set_word_pos(zigzag << 48);
            tails += Coins::new(rng).tails_before_heads(need);
        }
        tails
    }
}

/// Per-level totals of one sojourn-kernel trajectory.
struct LevelTotals {
    /// Visits, i.e. level moves made from each level.
    visits: Vec<u64>,
    /// Translation moves made at each level.
    moves: Vec<u64>,
    /// How many of those moves were `+d`.
    plus: Vec<u64>,
}

impl PreparedWalk {
    /// Kernel for a fair mix of `+-1` level moves and `+-d` translations.
    ///
    /// Level moves form a simple random walk on levels, read eight at a time
    /// from byte tables. Between two level moves the walk makes a geometric
    /// number of translations, so the translations at a level visited `v`
    /// times number `NegBin(v, 1/2)` and have a binomial net sign; both are
    /// drawn per level once the level walk has exited. This has the law of
    /// the step-by-step walk but uses the random streams differently.
    fn run_sojourn<const TRACK: bool>(&self, plan: &LevelPlan, index: u64) -> StoppedSample {
        let soj = plan.sojourn.as_ref().expect("sojourn tables");
        let (kmin, kmax) = (soj.kmin, soj.kmax);
        let max_steps = self.cfg.max_steps;
        let mut coins = Coins::new(trajectory_rng(self.cfg.seed, self.cfg.domain, index));
        // visits[k - kmin + 8]; eight slots of padding on both sides
        let width = (kmax - kmin + 17) as usize;
        // four interleaved copies, so consecutive blocks update different memory
        let mut lanes = vec![0u32; 4 * width];
        let mut visits = vec![0u32; width];
        let (mut k, mut j) = (0i64, 0u64);
        let mut exit = None;
        'walk: loop {
            let byte = coins.byte();
            let e = &soj.bytes[byte as usize];
            if k + (e.lo as i64) >= kmin && k + (e.hi as i64) <= kmax && j + 8 <= max_steps {
                let base = ((j >> 3) & 3) as usize * width + (k - kmin + 1) as usize;
                for (slot, add) in lanes[base..base + 16].iter_mut().zip(e.visits) {
                    *slot += add;
                }
                k += e.dk as i64;
                j += 8;
                continue;
            }
            for i in 0..8 {
                if j == max_steps {
                    break 'walk;
                }
                visits[(k - kmin + 8) as usize] += 1;
                k += if byte >> i & 1 == 1 { 1 } else { -1 };
                j += 1;
                if k < kmin {
                    exit = Some(ExitSide::High);
                    break 'walk;
                }
                if k > kmax {
                    exit = Some(ExitSide::Low);
                    break 'walk;
                }
            }
        }
        for (i, v) in visits.iter_mut().enumerate() {
            *v += lanes[i] + lanes[width + i] + lanes[2 * width + i] + lanes[3 * width + i];
        }
        let first = visits
            .iter()
            .position(|&v| v > 0)
            .expect("start level is visited");
        let last = visits
            .iter()
            .rposition(|&v| v > 0)
            .expect("start level is visited");
        let level_of = |i: usize| i as i64 + kmin - 8;
        let levels = last - first + 1;
        let mut totals = LevelTotals {
            visits: visits[first..=last].iter().map(|&v| v as u64).collect(),
            moves: vec![0; levels],
            plus: vec![0; levels],
        };
        let mut level_coins = LevelCoins::new(&self.cfg, index);
        let zero = (-level_of(first)) as usize;
        let mut translations = 0u64;
        for i in (zero..levels).chain((0..zero).rev()) {
            let n = level_coins.negbin(level_of(first) + i as i64, totals.visits[i]);
            totals.moves[i] = n;
            totals.plus[i] = coins.heads(n);
            translations += n;
        }
        let stop_time = j.saturating_add(translations);
        if exit.is_none() || stop_time > max_steps {
            return self.replay_censored::<TRACK>(
                plan,
                index,
                level_of(first),
                &totals,
                &mut coins,
            );
        }
        let mut acc = LevelAcc::new(plan.d.len(), false);
        acc.reserve(level_of(first), level_of(last));
        for (i, (&n, &h)) in totals.moves.iter().zip(&totals.plus).enumerate() {
            acc.add(level_of(first) + i as i64, 1, 2 * h as i64 - n as i64);
        }
        let visited = TRACK.then(|| self.levels_to_rho(plan, level_of(first), level_of(last)));
        StoppedSample {
            stop_kind: StopKind::SigmaR,
            stop_time,
            final_element: plan.rebuild(&self.cfg.start, &acc, k),
            exit_side: exit,
            visited,
        }
    }

    /// The state at `max_steps` of a sojourn-kernel trajectory that has not
    /// exited by then. Given the per-level totals, the translation counts
    /// of the successive visits to a level are a uniform composition of the
    /// total and their signs a uniform arrangement; these are drawn and the
    /// level walk is replayed in time order.
    #[cold]
    fn replay_censored<const TRACK: bool>(
        &self,
        plan: &LevelPlan,
        index: u64,
        first: i64,
        totals: &LevelTotals,
        coins: &mut Coins,
    ) -> StoppedSample {
        let max_steps = self.cfg.max_steps;
        let mut holds: Vec<std::vec::IntoIter<u64>> = Vec::new();
        let mut signs: Vec<std::vec::IntoIter<bool>> = Vec::new();
        for i in 0..totals.visits.len() {
            let (v, n, h) = (totals.visits[i], totals.moves[i], totals.plus[i]);
            // stars (`true`) and bars (`false`)
            let mut line: Vec<bool> = (0..n + v - 1).map(|x| x < n).collect();
            coins.shuffle(&mut line);
            let mut parts = vec![0u64];
            for star in line {
                if star {
                    *parts.last_mut().expect("nonempty") += 1;
                } else {
                    parts.push(0);
                }
            }
            holds.push(parts.into_iter());
            let mut s: Vec<bool> = (0..n).map(|x| x < h).collect();
            coins.shuffle(&mut s);
            signs.push(s.into_iter());
        }
        let mut dirs = Coins::new(trajectory_rng(self.cfg.seed, self.cfg.domain, index));
        let mut acc = LevelAcc::new(plan.d.len(), false);
        let (mut k, mut t) = (0i64, 0u64);
        let (mut lo, mut hi) = (0i64, 0i64);
        'replay: loop {
            let byte = dirs.byte();
            for b in 0..8 {
                lo = lo.min(k);
                hi = hi.max(k);
                let slot = (k - first) as usize;
                let hold = holds[slot].next().expect("visit has a holding count");
                let take = hold.min(max_steps - t);
                let net: i64 = (0..take)
                    .map(|_| {
                        if signs[slot].next().expect("sign") {
                            1
                        } else {
                            -1
                        }
                    })
                    .sum();
                acc.add(k, 1, net);
                t += take;
                if t == max_steps {
                    break 'replay;
                }
                k += if byte >> b & 1 == 1 { 1 } else { -1 };
                t += 1;
                if t == max_steps {
                    break 'replay;
                }
            }
        }
        let visited = TRACK.then(|| self.levels_to_rho(plan, lo, hi));
        StoppedSample {
            stop_kind: StopKind::Censored,
            stop_time: max_steps,
            final_element: plan.rebuild(&self.cfg.start, &acc, k),
            exit_side: None,
            visited,
        }
    }

    fn levels_to_rho(&self, plan: &LevelPlan, lo: i64, hi: i64) -> Vec<f64> {
        let mut v: Vec<f64> = (lo..=hi).map(|k| plan.rho_at(k)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

impl LevelPlan {
    fn build(cfg: &WalkConfig, sampler: &WeightedSampler) -> Result<Option<Self>, WalkError> {
        let g: &MeasuredGroup = &cfg.group;
        let Some(levels) = g.level_structure() else {
            return Ok(None);
        };
        match &cfg.stop {
            StopRule::Exit {
                height: Height::Rho,
                ..
            }
            | StopRule::Hit {
                height: Height::Rho,
                ..
            } => {}
            StopRule::Subgroup(lab)
                if matches!(
                    lab.kind(),
                    LabelingKind::Trivial | LabelingKind::LambdaExponentMod(_)
                ) => {}
            _ => return Ok(None),
        }
        let place = g.place();
        let mut d = vec![ValuedScalar::zero(place)];
        let mut class = Vec::new();
        let mut sign = Vec::new();
        for s in g.generators() {
            let c = s.element.c();
            if c.is_zero() {
                class.push(0);
                sign.push(0);
                continue;
            }
            let neg = c.neg();
            if let Some(j) = d.iter().position(|v| v == c) {
                class.push(j);
                sign.push(1);
            } else if let Some(j) = d.iter().position(|v| *v == neg) {
                class.push(j);
                sign.push(-1);
            } else {
                d.push(c.clone());
                class.push(d.len() - 1);
                sign.push(1);
            }
        }
        let base = levels.base().clone();
        let base_kind = classify_base(&base);
        let mut plan = LevelPlan {
            delta: levels.exponents().to_vec(),
            class,
            sign,
            d,
            base,
            base_kind,
            rho0: cfg.start.rho(),
            log_base: levels.log_base(),
            rule: LevelRule::Subgroup,
            block: None,
            sojourn: None,
            d_is_one: Vec::new(),
            lambda0_is_one: cfg.start.lambda().is_one(),
        };
        plan.d_is_one = plan.d.iter().map(ValuedScalar::is_one).collect();
        let l = plan.log_base.to_f64();
        let rho0 = plan.rho0.to_f64();
        plan.rule = match &cfg.stop {
            StopRule::Exit { lo, hi, .. } => {
                let inside = Interval::closed(*lo, *hi);
                let (kmin, kmax) = level_range(
                    |k| inside.contains(plan.rho_at(k)),
                    (rho0 - hi) / l,
                    (rho0 - lo) / l,
                )
                .ok_or_else(|| WalkError::InvalidConfig("empty level range".into()))?;
                LevelRule::Exit { kmin, kmax }
            }
            StopRule::Hit { set, .. } => {
                let ranges = set
                    .iter()
                    .filter_map(|i| {
                        level_range(
                            |k| i.contains(plan.rho_at(k)),
                            (rho0 - i.hi) / l,
                            (rho0 - i.lo) / l,
                        )
                    })
                    .collect();
                LevelRule::Hit { ranges }
            }
            StopRule::Subgroup(_) => LevelRule::Subgroup,
        };
        if let LevelRule::Exit { kmin, kmax } = plan.rule {
            if kmax - kmin < 1 << 20 {
                plan.block = BlockTable::build(sampler, &plan.delta, &plan.class, &plan.sign);
                if cfg.kernel == KernelChoice::Auto {
                    plan.sojourn = Sojourn::detect(g, &plan);
                }
            }
        }
        Ok(Some(plan))
    }

    /// `sum_K counts[K] beta^K` for one translation class.
    fn level_sum(&self, acc: &LevelAcc, j: usize) -> ValuedScalar {
        let place = self.base.place();
        let terms: Vec<(i64, i64)> = acc.class_terms(j).collect();
        let (Some(&(klo, _)), Some(&(khi, _))) = (terms.first(), terms.last()) else {
            return ValuedScalar::zero(place);
        };
        let count_at = |k: i64| acc.get(k, j);
        match &self.base_kind {
            BaseKind::Integer(b) => {
                let h = match power_of_two(b) {
                    Some(e) => shifted_sum(terms.iter().map(|&(k, n)| ((e * (k - klo)) as u64, n))),
                    None => {
                        let mut h = BigInt::zero();
                        for k in (klo..=khi).rev() {
                            h = h * b + count_at(k);
                        }
                        h
                    }
                };
                ValuedScalar::rational(scale_by_power(h, b, klo), place)
            }
            BaseKind::InverseInteger(b) => {
                let h = match power_of_two(b) {
                    Some(e) => shifted_sum(terms.iter().map(|&(k, n)| ((e * (khi - k)) as u64, n))),
                    None => {
                        let mut h = BigInt::zero();
                        for k in klo..=khi {
                            h = h * b + count_at(k);
                        }
                        h
                    }
                };
                ValuedScalar::rational(scale_by_power(h, b, -khi), place)
            }
            BaseKind::LaurentMonomial { coef, shift, p } => {
                let p64 = *p as u64;
                let coef_pow = |k: i64| -> i64 {
                    let base = if k >= 0 {
                        *coef as u64
                    } else {
                        inv_mod(*coef as u64, p64)
                    };
                    pow_mod(base, k.unsigned_abs(), p64) as i64
                };
                let sparse: Vec<(i64, i64)> = terms
                    .iter()
                    .map(|&(k, n)| {
                        (
                            shift * k,
                            (n.rem_euclid(*p as i64) * coef_pow(k)) % *p as i64,
                        )
                    })
                    .collect();
                ValuedScalar::laurent(LaurentRational::from_sparse(&sparse, *p))
            }
            BaseKind::General => {
                let mut h = ValuedScalar::zero(place);
                for k in (klo..=khi).rev() {
                    let n = ValuedScalar::from_int(count_at(k), place);
                    h = h
                        .mul(&self.base)
                        .and_then(|v| v.add(&n))
                        .expect("same place");
                }
                h.mul(&self.base.pow(klo).expect("nonzero base"))
                    .expect("same place")
            }
        }
    }

    fn rebuild(&self, start: &AffineElement, acc: &LevelAcc, k: i64) -> AffineElement {
        let mut sum: Option<ValuedScalar> = None;
        for j in 1..self.d.len() {
            let pj = self.level_sum(acc, j);
            if pj.is_zero() {
                continue;
            }
            let term = if self.d_is_one[j] {
                pj
            } else {
                self.d[j].mul(&pj).expect("same place")
            };
            sum = Some(match sum {
                None => term,
                Some(s) => s.add(&term).expect("same place"),
            });
        }
        let c = match sum {
            None => start.c().clone(),
            Some(s) => {
                let scaled = if self.lambda0_is_one {
                    s
                } else {
                    start.lambda().mul(&s).expect("same place")
                };
                if start.c().is_zero() {
                    scaled
                } else {
                    start.c().add(&scaled).expect("same place")
                }
            }
        };
        let lambda = if k == 0 {
            start.lambda().clone()
        } else {
            let bk = self.base_pow(k);
            if self.lambda0_is_one {
                bk
            } else {
                start.lambda().mul(&bk).expect("same place")
            }
        };
        AffineElement::new(c, lambda).expect("lambda stays nonzero")
    }

    fn base_pow(&self, k: i64) -> ValuedScalar {
        let place = self.base.place();
        let unsigned = |b: &BigInt, e: i64| {
            let p = num_traits::pow(b.clone(), e.unsigned_abs() as usize);
            if e >= 0 {
                BigRational::from_integer(p)
            } else {
                BigRational::new(BigInt::one(), p)
            }
        };
        match &self.base_kind {
            BaseKind::Integer(b) => ValuedScalar::rational(unsigned(b, k), place),
            BaseKind::InverseInteger(b) => ValuedScalar::rational(unsigned(b, -k), place),
            BaseKind::LaurentMonomial { coef, shift, p } => {
                let c = if k >= 0 {
                    pow_mod(*coef as u64, k as u64, *p as u64)
                } else {
                    pow_mod(
                        inv_mod(*coef as u64, *p as u64),
                        k.unsigned_abs(),
                        *p as u64,
                    )
                };
                ValuedScalar::laurent(LaurentRational::monomial(c as i64, shift * k, *p))
            }
            BaseKind::General => self.base.pow(k).expect("nonzero base"),
        }
    }
}

fn scale_by_power(h: BigInt, b: &BigInt, e: i64) -> BigRational {
    let pow = num_traits::pow(b.clone(), e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(h * pow)
    } else if pow.is_negative() {
        BigRational::new(-h, -pow)
    } else {
        BigRational::new(h, pow)
    }
}

/// `e` with `b = 2^e`, for `b >= 2`.
fn power_of_two(b: &BigInt) -> Option<i64> {
    let bits = b.bits();
    (b.is_positive() && bits >= 2 && b.trailing_zeros() == Some(bits - 1))
        .then(|| (bits - 1) as i64)
}

/// `sum n * 2^pos`, accumulated in 64-bit limbs before one big-integer pass.
fn shifted_sum(terms: impl Iterator<Item = (u64, i64)>) -> BigInt {
    let mut limbs: Vec<i128> = Vec::new();
    for (pos, n) in terms {
        let idx = (pos / 64) as usize;
        if limbs.len() <= idx {
            limbs.resize(idx + 1, 0);
        }
        limbs[idx] += (n as i128) << (pos % 64);
    }
    let mut h = BigInt::zero();
    for &limb in limbs.iter().rev() {
        h = (h << 64u32) + BigInt::from(limb);
    }
    h
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn classify_base(base: &ValuedScalar) -> BaseKind {
    if let Some(q) = base.as_rational() {
        if q.denom().is_one() {
            return BaseKind::Integer(q.numer().clone());
        }
        if q.numer().is_one() {
            return BaseKind::InverseInteger(q.denom().clone());
        }
        if (-q.numer()).is_one() {
            return BaseKind::InverseInteger(-q.denom());
        }
        return BaseKind::General;
    }
    if let Some(v) = base.as_laurent() {
        if let Some(terms) = v.laurent_terms() {
            if let [(shift, coef)] = terms[..] {
                return BaseKind::LaurentMonomial {
                    coef,
                    shift,
                    p: v.characteristic(),
                };
            }
        }
    }
    BaseKind::General
}

/// Per-level signed move counts, stored densely over a window of levels
/// that grows on demand.
struct LevelAcc {
    nclass: usize,
    offset: i64,
    counts: Vec<i64>,
    visits: Vec<bool>,
    track: bool,
}

impl LevelAcc {
    fn new(nclass: usize, track: bool) -> Self {
        let mut acc = LevelAcc {
            nclass,
            offset: -32,
            counts: Vec::new(),
            visits: Vec::new(),
            track,
        };
        acc.counts = vec![0; 65 * nclass];
        if track {
            acc.visits = vec![false; 65];
        }
        acc
    }

    fn width(&self) -> i64 {
        (self.counts.len() / self.nclass) as i64
    }

    fn reserve(&mut self, lo: i64, hi: i64) {
        self.ensure(lo);
        self.ensure(hi);
    }

    #[inline]
    fn ensure(&mut self, k: i64) {
        let idx = k - self.offset;
        if idx >= 0 && idx < self.width() {
            return;
        }
        self.grow(k);
    }

    #[cold]
    fn grow(&mut self, k: i64) {
        let w = self.width();
        let lo = self.offset.min(k - w / 2);
        let hi = (self.offset + w - 1).max(k + w / 2);
        let new_w = (hi - lo + 1) as usize;
        let mut counts = vec![0; new_w * self.nclass];
        let shift = (self.offset - lo) as usize;
        counts[shift * self.nclass..(shift + w as usize) * self.nclass]
            .copy_from_slice(&self.counts);
        self.counts = counts;
        if self.track {
            let mut visits = vec![false; new_w];
            visits[shift..shift + w as usize].copy_from_slice(&self.visits);
            self.visits = visits;
        }
        self.offset = lo;
    }

    #[inline]
    fn add(&mut self, k: i64, class: usize, sign: i64) {
        self.ensure(k);
        let idx = (k - self.offset) as usize * self.nclass + class;
        self.counts[idx] += sign;
    }

    #[inline]
    fn visit(&mut self, k: i64) {
        self.ensure(k);
        self.visits[(k - self.offset) as usize] = true;
    }

    fn get(&self, k: i64, class: usize) -> i64 {
        let idx = k - self.offset;
        if idx < 0 || idx >= self.width() {
            return 0;
        }
        self.counts[idx as usize * self.nclass + class]
    }

    /// Nonzero `(level, count)` pairs of one class, ascending in level.
    fn class_terms(&self, class: usize) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.width()).filter_map(move |i| {
            let n = self.counts[i as usize * self.nclass + class];
            (n != 0).then_some((i + self.offset, n))
        })
    }

    fn visited_levels(&self) -> impl Iterator<Item = i64> + '_ {
        self.visits
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(i, _)| i as i64 + self.offset)
    }
}

/// One trajectory of `cfg`, identified by its index.
pub fn sample_stopped_walk(cfg: &WalkConfig, index: u64) -> Result<StoppedSample, WalkError> {
    Ok(PreparedWalk::new(cfg)?.sample(index))
}

/// Positions `X_t` at the requested times (ascending) along one unstopped
/// trajectory, using the exact kernel and the stream of `(seed, domain, index)`.
pub fn walk_positions(
    group: &MeasuredGroup,
    start: &AffineElement,
    seed: u64,
    domain: u64,
    index: u64,
    times: &[u64],
) -> Result<Vec<AffineElement>, WalkError> {
    let weights: Vec<u64> = group.generators().iter().map(|s| s.weight).collect();
    let sampler = WeightedSampler::new(&weights)
        .ok_or_else(|| GroupError::InvalidMeasure("total weight must stay below 2^20".into()))?;
    let mut src = BitSource::new(trajectory_rng(seed, domain, index));
    let mut x = start.clone();
    let mut t = 0u64;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target < t {
            return Err(WalkError::InvalidConfig("times must be ascending".into()));
        }
        while t < target {
            let s = sampler.sample(&mut src);
            x = x.mul(&group.generators()[s].element)?;
            t += 1;
        }
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::groups::{bs12, CosetLabeling};
    use crate::stats::Moments;

    fn group(name: &str) -> Arc<MeasuredGroup> {
        Arc::new(MeasuredGroup::builtin(name).unwrap())
    }

    fn moments(walk: &PreparedWalk, n: u64, f: impl Fn(&StoppedSample) -> f64) -> Moments {
        let mut m = Moments::default();
        for i in 0..n {
            m.push(f(&walk.sample(i)));
        }
        m
    }

    type Stat<'a> = (&'a str, &'a dyn Fn(&StoppedSample) -> f64);

    fn assert_same_law(cfg: &WalkConfig, n: u64, stats: &[Stat]) {
        let fast = PreparedWalk::new(&cfg.clone().with_kernel(KernelChoice::Auto)).unwrap();
        let slow = PreparedWalk::new(&cfg.clone().with_kernel(KernelChoice::Exact)).unwrap();
        for (name, f) in stats {
            let a = moments(&fast, n, f);
            let b = moments(&slow, n, f);
            let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
            assert!(
                (a.mean - b.mean).abs() <= 5.0 * se + 1e-12,
                "{name}: {} vs {} (se {se})",
                a.mean,
                b.mean
            );
        }
    }

    #[test]
    fn select_finds_ranked_bits() {
        for w in [
            1u64,
            0b1011_0100,
            u64::MAX,
            0x8000_0000_0000_0001,
            0xdead_beef_0bad_f00d,
        ] {
            let positions: Vec<u32> = (0..64).filter(|i| w >> i & 1 == 1).collect();
            for (r, &p) in positions.iter().enumerate() {
                assert_eq!(select(w, r as u32), p, "{w:#x} rank {r}");
            }
        }
    }

    #[test]
    fn coin_shortcuts_agree_with_single_coins() {
        let mut fast = Coins::new(trajectory_rng(5, 6, 7));
        let mut slow = Coins::new(trajectory_rng(5, 6, 7));
        let one = |c: &mut Coins| c.take(1) == 1;
        for round in 0..300u64 {
            let v = round % 37;
            let mut tails = 0;
            let mut heads = 0;
            while heads < v {
                if one(&mut slow) {
                    heads += 1;
                } else {
                    tails += 1;
                }
            }
            assert_eq!(fast.tails_before_heads(v), tails);
            let n = (round * 7) % 150;
            let h = (0..n).filter(|_| one(&mut slow)).count() as u64;
            assert_eq!(fast.heads(n), h);
            let bits: Vec<bool> = (0..8).map(|_| one(&mut slow)).collect();
            let byte = fast.byte();
            assert!(bits
                .iter()
                .enumerate()
                .all(|(i, &b)| (byte >> i & 1 == 1) == b));
        }
    }

    #[test]
    fn level_kernels_replay_exact_trajectories() {
        for name in ["bs12", "lamplighter:2", "lamplighter:3"] {
            let g = group(name);
            let id = g.identity();
            let lab = Arc::new(CosetLabeling::new(&g, LabelingKind::LambdaExponentMod(2)).unwrap());
            let two_sided = vec![Interval::above(2.5), Interval::below(-2.5)];
            let configs = [
                WalkConfig::sigma_r(g.clone(), id.clone(), 5.0, 3),
                WalkConfig::sigma_r(g.clone(), id.clone(), 5.0, 3).with_max_steps(7),
                WalkConfig::new(
                    g.clone(),
                    id.clone(),
                    StopRule::Hit {
                        height: Height::Rho,
                        set: two_sided,
                    },
                    3,
                ),
                WalkConfig::new(g.clone(), id.clone(), StopRule::Subgroup(lab), 3)
                    .with_max_steps(500),
            ];
            for cfg in configs {
                let cfg = cfg.with_visits();
                let levels =
                    PreparedWalk::new(&cfg.clone().with_kernel(KernelChoice::Levels)).unwrap();
                let exact =
                    PreparedWalk::new(&cfg.clone().with_kernel(KernelChoice::Exact)).unwrap();
                assert!(levels.uses_levels() && !exact.uses_levels());
                for i in 0..300 {
                    assert_eq!(
                        levels.sample(i),
                        exact.sample(i),
                        "{name} {} index {i}",
                        cfg.describe()
                    );
                }
            }
        }
    }

    #[test]
    fn sojourn_kernel_has_the_exact_law() {
        let c_zero = |s: &StoppedSample| s.final_element.c().is_zero() as u8 as f64;
        let small_c = |s: &StoppedSample| s.final_element.c().abs_lt_int(3) as u8 as f64;
        let time = |s: &StoppedSample| s.stop_time as f64;
        let high = |s: &StoppedSample| (s.exit_side == Some(ExitSide::High)) as u8 as f64;
        let censored = |s: &StoppedSample| s.is_censored() as u8 as f64;
        let rho = |s: &StoppedSample| s.final_rho().to_f64();
        let visited = |s: &StoppedSample| s.visited.as_ref().map_or(0, Vec::len) as f64;
        let c_value = |s: &StoppedSample| {
            s.final_element
                .c()
                .to_f64()
                .unwrap_or(0.0)
                .clamp(-50.0, 50.0)
        };
        let degree = |s: &StoppedSample| {
            s.final_element
                .c()
                .as_laurent()
                .and_then(|c| c.degree())
                .unwrap_or(-1) as f64
        };
        let g = group("bs12");
        let cfg = WalkConfig::sigma_r(g.clone(), g.identity(), 4.0, 21).with_visits();
        let stats: [Stat; 6] = [
            ("time", &time),
            ("high", &high),
            ("small_c", &small_c),
            ("c_zero", &c_zero),
            ("visited", &visited),
            ("c", &c_value),
        ];
        assert!(PreparedWalk::new(&cfg).unwrap().uses_levels());
        assert_same_law(&cfg, 20_000, &stats);
        // mostly censored runs go through the time-ordered replay
        let capped = cfg.clone().with_max_steps(12);
        let stats: [Stat; 5] = [
            ("censored", &censored),
            ("rho", &rho),
            ("c_zero", &c_zero),
            ("visited", &visited),
            ("c", &c_value),
        ];
        assert_same_law(&capped, 20_000, &stats);
        let g = group("lamplighter:3");
        let cfg = WalkConfig::sigma_r(g.clone(), g.identity(), 3.0, 21).with_visits();
        let stats: [Stat; 4] = [
            ("time", &time),
            ("high", &high),
            ("c_zero", &c_zero),
            ("degree", &degree),
        ];
        assert_same_law(&cfg, 10_000, &stats);
    }

    #[test]
    fn immediate_stop_at_start() {
        let g = Arc::new(bs12());
        let start = g.generator("a^-1").unwrap().element.pow(10);
        let cfg = WalkConfig::sigma_r(g, start.clone(), 4.0, 1).with_visits();
        let s = PreparedWalk::new(&cfg).unwrap().sample(0);
        assert_eq!(s.stop_time, 0);
        assert_eq!(s.exit_side, Some(ExitSide::High));
        assert_eq!(s.final_element, start);
        assert_eq!(s.visited, Some(vec![]));
    }

    #[test]
    fn zline_exit_times() {
        let g = group("zline");
        for (r, expected) in [(4.0, 25.0), (8.0, 81.0)] {
            let cfg = WalkConfig::sigma_r(g.clone(), g.identity(), r, 2);
            let m = moments(&PreparedWalk::new(&cfg).unwrap(), 20_000, |s| {
                s.stop_time as f64
            });
            assert!(
                (m.mean - expected).abs() < 4.0 * m.std_error(),
                "r = {r}: {}",
                m.mean
            );
        }
    }

    #[test]
    fn first_step_hitting_probabilities() {
        let g = Arc::new(bs12());
        for (set, p) in [
            (vec![Interval::above(0.0)], 0.25),
            (vec![Interval::below(0.0), Interval::above(0.0)], 0.5),
        ] {
            let stop = StopRule::Hit {
                height: Height::Rho,
                set,
            };
            let cfg = WalkConfig::new(g.clone(), g.identity(), stop, 4).with_max_steps(50);
            let m = moments(&PreparedWalk::new(&cfg).unwrap(), 40_000, |s| {
                (s.stop_time == 1) as u8 as f64
            });
            assert!(
                (m.mean - p).abs() < 4.0 * m.std_error(),
                "{} vs {p}",
                m.mean
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exit_runs_are_consistent_and_monotone_in_r(
            name in prop::sample::select(vec!["bs12", "lamplighter:3", "lamplighter:2"]),
            r in 1.0f64..12.0,
            extra in 0.0f64..6.0,
            index in 0u64..10_000,
        ) {
            let g = group(name);
            let small = PreparedWalk::new(&WalkConfig::sigma_r(g.clone(), g.identity(), r, 9).with_visits()).unwrap();
            let large = PreparedWalk::new(&WalkConfig::sigma_r(g.clone(), g.identity(), r + extra, 9)).unwrap();
            let s = small.sample(index);
            let l = large.sample(index);
            prop_assert!(s.stop_time <= l.stop_time);
            if !s.is_censored() {
                prop_assert!(s.stop_time >= 1);
                prop_assert!(s.final_rho().to_f64().abs() > r);
                let visited = s.visited.unwrap();
                prop_assert!(!visited.is_empty());
                prop_assert!(visited.iter().all(|v| v.abs() <= r + 1e-9));
            }
        }
    }
}
