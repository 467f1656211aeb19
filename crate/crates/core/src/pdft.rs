//! Assignment and timing of a partial decision.
//!
//! Given per-food-type preparation sequences and a flat trip sequence, the
//! PDFT decides whether cooks, vehicles and times exist that realize the
//! sequences, and if so returns the earliest such schedule. Decisions are
//! taken order by order (food type by food type), then trip by trip, always at
//! the earliest time compatible with the current departure-window lower
//! bounds. When an order or trip cannot be placed inside its window, the
//! lower bound of the blocking trip is raised and the search resumes from the
//! first decision that touches that trip.
//!
//! Every raised bound is implied by the constraints, and the greedy choices
//! are componentwise earliest, so the schedule found is the least feasible
//! one. Delay is nondecreasing in departure times, which makes it optimal.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::ModelError;
use crate::model::{trip_timing, Ctx, Plan, State, Trip, PLAN_TOL as TOL};

/// Sequences-only decision: one preparation sequence per food type and one
/// flat trip sequence ordered by departure.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialDecision {
    pub food_seqs: Vec<Vec<usize>>,
    pub trips: Vec<Vec<usize>>,
}

impl PartialDecision {
    /// Checks coverage, capacity and that started orders lead their food
    /// type's sequence in start order.
    pub fn validate(&self, ctx: &Ctx, state: &State) -> Result<(), ModelError> {
        let fail = |m: String| Err(ModelError::InvalidPlan(m));
        let required = state.decision_orders();
        if self.food_seqs.len() != ctx.cfg.food_types.len() {
            return fail("one preparation sequence per food type is required".into());
        }
        let mut in_seq: Vec<usize> = self.food_seqs.concat();
        in_seq.sort_unstable();
        if in_seq != required {
            return fail("preparation sequences do not cover exactly the open orders".into());
        }
        let mut in_trips: Vec<usize> = self.trips.concat();
        in_trips.sort_unstable();
        if in_trips != required {
            return fail("trips do not cover exactly the open orders".into());
        }
        if self
            .trips
            .iter()
            .any(|t| t.is_empty() || t.len() > ctx.cfg.capacity)
        {
            return fail("trip size outside 1..=capacity".into());
        }
        for (f, seq) in self.food_seqs.iter().enumerate() {
            if seq.iter().any(|&i| ctx.order(i).food_type != f) {
                return fail(format!("sequence {f} holds an order of another food type"));
            }
            let expected = started_in_order(state, seq);
            if seq[..expected.len()] != expected[..] {
                return fail(format!("started orders must lead sequence {f} in start order"));
            }
        }
        Ok(())
    }
}

/// Started orders among `orders`, sorted by start time then cook index.
pub fn started_in_order(state: &State, orders: &[usize]) -> Vec<usize> {
    let mut s: Vec<(f64, usize, usize)> = orders
        .iter()
        .filter(|&&i| state.is_started(i))
        .map(|&i| {
            (
                state.plan.start_times[&i],
                state.plan.cook_of(i).unwrap_or(usize::MAX),
                i,
            )
        })
        .collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    s.into_iter().map(|x| x.2).collect()
}

/// Dynamic-program state of the assignment and timing problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtpState {
    pub cook_eligibility: Vec<f64>,
    pub vehicle_eligibility: Vec<f64>,
    /// Per trip of the partial decision, the departure window.
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub decision_index: usize,
}

impl AtpState {
    pub fn window_inverted(&self) -> bool {
        self.lb.iter().zip(&self.ub).any(|(l, u)| *l > *u + TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Feasible,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtpSolution {
    /// Per unstarted order: (order, cook, start).
    pub starts: Vec<(usize, usize, f64)>,
    /// Per trip of the partial decision: (vehicle, departure).
    pub departures: Vec<(usize, f64)>,
    pub total_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub decision_index: usize,
    /// Order id or trip index of the decision.
    pub subject: usize,
    pub is_trip: bool,
    pub time: f64,
    /// Decision index resumed from when this step failed.
    pub backtrack_to: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdftResult {
    pub verdict: Verdict,
    /// Forward passes; 0 when the initial windows already prove infeasibility.
    pub iterations: usize,
    pub backtracks: usize,
    pub solution: Option<AtpSolution>,
    pub trace: Vec<TraceRecord>,
}

impl PdftResult {
    pub fn is_feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdftConfig {
    pub max_iter: usize,
    pub trace: bool,
}

impl Default for PdftConfig {
    fn default() -> Self {
        PdftConfig {
            max_iter: 25,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Order(usize),
    Trip(usize),
}

/// Per-call data derived from the state and the partial decision.
struct Setup {
    n_trips: usize,
    fleet: usize,
    trip_orders: Vec<Vec<usize>>,
    handover: Vec<Vec<f64>>,
    dur: Vec<f64>,
    trip_of: Vec<usize>,
    off: Vec<f64>,
    /// Suffix minimum over trips of the departure upper bound set by started
    /// orders and the horizon.
    cub_suffix: Vec<f64>,
    steps: Vec<Step>,
    /// Per trip m, the earliest order step whose trip index is at least m.
    first_order_step: Vec<Option<usize>>,
    init: AtpState,
    trivially_infeasible: bool,
}

fn setup(ctx: &Ctx, state: &State, pd: &PartialDecision) -> Setup {
    let cfg = ctx.cfg;
    let n_orders = ctx.orders.len();
    let n_trips = pd.trips.len();
    let mut trip_of = vec![usize::MAX; n_orders];
    let mut off = vec![0.0; n_orders];
    let mut handover = Vec::with_capacity(n_trips);
    let mut dur = Vec::with_capacity(n_trips);
    let mut cub = vec![cfg.horizon; n_trips];
    let mut trivially_infeasible = false;
    let cook_e = state.cook_eligibility(ctx);
    let veh_e = state.vehicle_eligibility();
    let min_ve = veh_e.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lb = vec![min_ve; n_trips];

    for (m, trip) in pd.trips.iter().enumerate() {
        let timing = trip_timing(ctx, trip);
        for (j, &i) in trip.iter().enumerate() {
            trip_of[i] = m;
            off[i] = timing.fresh[j];
            let delta = ctx.freshness_of(i);
            if off[i] > delta + TOL {
                trivially_infeasible = true;
            }
            if state.is_started(i) {
                let ready = state.plan.start_times[&i] + ctx.order(i).t_prep;
                lb[m] = lb[m].max(ready);
                cub[m] = cub[m].min(ready + delta - off[i]);
            }
        }
        handover.push(timing.handover);
        dur.push(timing.duration);
    }

    let mut steps = Vec::new();
    for seq in &pd.food_seqs {
        steps.extend(seq.iter().filter(|&&i| !state.is_started(i)).map(|&i| Step::Order(i)));
    }
    let n_order_steps = steps.len();
    steps.extend((0..n_trips).map(Step::Trip));

    let mut first_order_step = vec![None; n_trips];
    for (n, step) in steps[..n_order_steps].iter().enumerate() {
        if let Step::Order(i) = *step {
            for slot in first_order_step.iter_mut().take(trip_of[i] + 1) {
                if slot.is_none() {
                    *slot = Some(n);
                }
            }
        }
    }

    let mut cub_suffix = cub.clone();
    for m in (0..n_trips.saturating_sub(1)).rev() {
        cub_suffix[m] = cub_suffix[m].min(cub_suffix[m + 1]);
    }

    let mut s = Setup {
        n_trips,
        fleet: cfg.fleet_size,
        trip_orders: pd.trips.clone(),
        handover,
        dur,
        trip_of,
        off,
        cub_suffix,
        steps,
        first_order_step,
        init: AtpState {
            cook_eligibility: cook_e,
            vehicle_eligibility: veh_e,
            lb,
            ub: cub,
            decision_index: 0,
        },
        trivially_infeasible,
    };
    let mut lb: Vec<Lin> = s.init.lb.iter().map(|&x| Lin::c(x)).collect();
    s.propagate(&mut lb, 0, &mut Regime::new());
    s.init.lb = lb.iter().map(|x| x.v).collect();
    if s.init.window_inverted() {
        s.trivially_infeasible = true;
    }
    s
}

impl Setup {
    /// Closes departure lower bounds under sequence order (departures are
    /// nondecreasing along the trip sequence) and vehicle reuse: among any
    /// `fleet + 1` consecutive trips two share a vehicle, so the last cannot
    /// leave before the earliest possible return among the preceding `fleet`.
    fn propagate(&self, lb: &mut [Lin], from: usize, rg: &mut Regime) {
        for m in from.max(1)..self.n_trips {
            let mut v = rg.max(lb[m], lb[m - 1]);
            if m >= self.fleet {
                let reuse = (m - self.fleet..m)
                    .map(|l| lb[l].add(self.dur[l]))
                    .reduce(|a, b| rg.min(a, b))
                    .expect("fleet is positive");
                v = rg.max(v, reuse);
            }
            lb[m] = v;
        }
    }
}

/// A value as a function of a shift `t >= 0` of one raised departure bound:
/// `v + s * t` for `t <= until`. While no branch of a pass changes, every
/// value is a max, min or shift of the bound, so it is nondecreasing in `t`
/// and grows at most one for one; the bounds below rely on that.
#[derive(Debug, Clone, Copy)]
struct Lin {
    v: f64,
    s: u8,
    until: f64,
}

impl Lin {
    fn c(v: f64) -> Lin {
        Lin {
            v,
            s: 0,
            until: f64::INFINITY,
        }
    }

    fn add(self, d: f64) -> Lin {
        Lin { v: self.v + d, ..self }
    }

    /// Shift after which the value may start to grow; until then it is at
    /// most `v + s * t`.
    fn flat_for(self) -> f64 {
        if self.s == 1 {
            0.0
        } else {
            self.until
        }
    }

    /// Shift up to which the value is at least `v + t`.
    fn rising_for(self) -> f64 {
        if self.s == 1 {
            self.until
        } else {
            0.0
        }
    }
}

/// Tracks the largest shift of the raised bound for which every branch of a
/// pass keeps its outcome.
struct Regime {
    until: f64,
}

impl Regime {
    fn new() -> Regime {
        Regime {
            until: f64::INFINITY,
        }
    }

    fn max(&mut self, a: Lin, b: Lin) -> Lin {
        let (w, l) = if a.v > b.v || (a.v == b.v && a.s >= b.s) { (a, b) } else { (b, a) };
        let until = if w.s == 1 {
            w.until
        } else {
            w.until.min(l.flat_for() + (w.v - l.v))
        };
        Lin { until, ..w }
    }

    fn min(&mut self, a: Lin, b: Lin) -> Lin {
        let (w, l) = if a.v < b.v || (a.v == b.v && a.s <= b.s) { (a, b) } else { (b, a) };
        let until = if w.s == 0 {
            w.until
        } else {
            w.until.min(l.rising_for() + (l.v - w.v))
        };
        Lin { until, ..w }
    }

    /// `a > b + TOL`.
    fn gt(&mut self, a: Lin, b: Lin) -> bool {
        let r = a.v > b.v + TOL;
        let lasting = if r {
            let gap = a.v - b.v - TOL;
            if a.s == 1 {
                a.until + gap
            } else {
                b.flat_for() + gap
            }
        } else {
            // Tolerance aside, `a` may only rise to `b`: jumps must not land
            // on the far side of the slack.
            let gap = (b.v - a.v).max(0.0);
            if b.s == 1 {
                b.until + gap
            } else {
                a.flat_for() + gap
            }
        };
        self.until = self.until.min(lasting);
        r
    }

    /// `a <= b + TOL`.
    fn le(&mut self, a: Lin, b: Lin) -> bool {
        !self.gt(a, b)
    }
}

/// Working copy of the windows and eligibilities during a pass.
#[derive(Debug, Clone)]
struct Work {
    cook: Vec<Lin>,
    veh: Vec<Lin>,
    lb: Vec<Lin>,
    ub: Vec<Lin>,
}

impl Work {
    fn from_atp(a: &AtpState) -> Work {
        let lin = |v: &[f64]| v.iter().map(|&x| Lin::c(x)).collect();
        Work {
            cook: lin(&a.cook_eligibility),
            veh: lin(&a.vehicle_eligibility),
            lb: lin(&a.lb),
            ub: lin(&a.ub),
        }
    }

    fn flatten(&mut self) {
        for x in [&mut self.cook, &mut self.veh, &mut self.lb, &mut self.ub]
            .into_iter()
            .flatten()
        {
            *x = Lin::c(x.v);
        }
    }
}

/// Initial cook/vehicle eligibility and departure windows.
pub fn initial_atp_state(
    ctx: &Ctx,
    state: &State,
    pd: &PartialDecision,
) -> Result<AtpState, ModelError> {
    pd.validate(ctx, state)?;
    Ok(setup(ctx, state, pd).init)
}

/// Interval of feasible preparation starts for an unstarted order given the
/// windows of `atp`; `None` when empty.
pub fn feasibility_window_order(
    ctx: &Ctx,
    pd: &PartialDecision,
    atp: &AtpState,
    order: usize,
) -> Option<(f64, f64)> {
    let q = pd.trips.iter().position(|t| t.contains(&order))?;
    let pos = pd.trips[q].iter().position(|&i| i == order)?;
    let off = trip_timing(ctx, &pd.trips[q]).fresh[pos];
    let o = ctx.order(order);
    let delta = ctx.freshness_of(order);
    let cooks = ctx.cfg.cooks_of(o.food_type);
    let min_ce = atp.cook_eligibility[cooks]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let earliest = min_ce.max(atp.lb[q] + off - o.t_prep - delta);
    let latest = atp.ub[q..].iter().copied().fold(f64::INFINITY, f64::min) - o.t_prep;
    (earliest <= latest + TOL).then_some((earliest, latest))
}

fn infeasible(verdict: Verdict, iterations: usize, backtracks: usize, trace: Vec<TraceRecord>) -> PdftResult {
    PdftResult {
        verdict,
        iterations,
        backtracks,
        solution: None,
        trace,
    }
}

/// Runs the PDFT on a structurally valid partial decision.
pub fn run_pdft(
    ctx: &Ctx,
    state: &State,
    pd: &PartialDecision,
    cfg: PdftConfig,
) -> Result<PdftResult, ModelError> {
    pd.validate(ctx, state)?;
    Ok(run_unchecked(ctx, state, pd, cfg))
}

pub(crate) fn run_unchecked(
    ctx: &Ctx,
    state: &State,
    pd: &PartialDecision,
    cfg: PdftConfig,
) -> PdftResult {
    let s = setup(ctx, state, pd);
    if s.trivially_infeasible {
        return infeasible(Verdict::Infeasible, 0, 0, Vec::new());
    }
    let n_steps = s.steps.len();
    let mut raised = vec![Lin::c(f64::NEG_INFINITY); s.n_trips];
    let mut snapshots: Vec<Work> = Vec::with_capacity(n_steps + 1);
    let mut seen: HashSet<(usize, Vec<u64>)> = HashSet::new();
    let mut cur = Work::from_atp(&s.init);
    let mut chosen_cook = vec![0usize; n_steps];
    let mut chosen_time = vec![0.0f64; n_steps];
    let mut iterations = 1;
    let mut backtracks = 0;
    let mut trace = Vec::new();
    let mut n = 0;
    // Values carry their slope with respect to the bound of the anchor trip.
    // `chain` lists the trips raised since the anchor was last raised.
    let mut anchor: Option<usize> = None;
    let mut chain: Vec<usize> = Vec::new();
    let mut rg = Regime::new();

    while n < n_steps {
        if snapshots.len() > n {
            snapshots.truncate(n);
        }
        snapshots.push(cur.clone());

        // (blocking trip, raised lower bound) when the step fails.
        let failure: Option<(usize, Lin)> = match s.steps[n] {
            Step::Order(i) => {
                let o = ctx.order(i);
                let delta = ctx.freshness_of(i);
                let q = s.trip_of[i];
                let cooks = ctx.cfg.cooks_of(o.food_type);
                let min_ce = cur.cook[cooks.clone()]
                    .iter()
                    .copied()
                    .reduce(|a, b| rg.min(a, b))
                    .expect("food type has a cook");
                let a = rg.max(min_ce, cur.lb[q].add(s.off[i] - o.t_prep - delta));
                let mut lb = cur.lb.clone();
                lb[q] = rg.max(lb[q], a.add(o.t_prep));
                s.propagate(&mut lb, q, &mut rg);
                let ub_q = rg.min(cur.ub[q], a.add(o.t_prep + delta - s.off[i]));
                let ub = |m: usize| if m == q { ub_q } else { cur.ub[m] };
                match (q..s.n_trips).find(|&m| rg.gt(lb[m], ub(m))) {
                    Some(m) => Some((m, lb[m])),
                    None => {
                        let c = cooks
                            .clone()
                            .find(|&c| rg.le(cur.cook[c], a))
                            .expect("a cook is free at the earliest start");
                        for k in cooks {
                            cur.cook[k] = rg.max(cur.cook[k], a);
                        }
                        cur.cook[c] = a.add(o.t_prep);
                        cur.lb = lb;
                        cur.ub[q] = ub_q;
                        chosen_cook[n] = c;
                        chosen_time[n] = a.v;
                        None
                    }
                }
            }
            Step::Trip(m) => {
                let min_ve = cur
                    .veh
                    .iter()
                    .copied()
                    .reduce(|a, b| rg.min(a, b))
                    .expect("fleet is positive");
                let d = rg.max(min_ve, cur.lb[m]);
                if rg.gt(d, cur.ub[m]) {
                    Some((m, d))
                } else {
                    let v = (0..cur.veh.len())
                        .find(|&v| rg.le(cur.veh[v], d))
                        .expect("a vehicle is free at the earliest departure");
                    cur.veh[v] = d.add(s.dur[m]);
                    cur.lb[m] = d;
                    if m + 1 < s.n_trips {
                        cur.lb[m + 1] = rg.max(cur.lb[m + 1], d);
                        s.propagate(&mut cur.lb, m + 1, &mut rg);
                    }
                    chosen_cook[n] = v;
                    chosen_time[n] = d.v;
                    None
                }
            }
        };

        let Some((m_block, bound)) = failure else {
            if cfg.trace {
                let (subject, is_trip) = match s.steps[n] {
                    Step::Order(i) => (i, false),
                    Step::Trip(m) => (m, true),
                };
                trace.push(TraceRecord {
                    iteration: iterations,
                    decision_index: n,
                    subject,
                    is_trip,
                    time: chosen_time[n],
                    backtrack_to: None,
                });
            }
            n += 1;
            continue;
        };

        let resume = s.first_order_step[m_block];
        if cfg.trace {
            let (subject, is_trip) = match s.steps[n] {
                Step::Order(i) => (i, false),
                Step::Trip(m) => (m, true),
            };
            trace.push(TraceRecord {
                iteration: iterations,
                decision_index: n,
                subject,
                is_trip,
                time: bound.v,
                backtrack_to: resume,
            });
        }
        let back_at_anchor = anchor == Some(m_block);
        let mut next = rg.max(raised[m_block], bound);
        if back_at_anchor {
            // While no branch changes, raising the anchor by `t` still comes
            // back here asking for more than it got, so no schedule departs
            // this trip before the end of that range.
            let x = raised[m_block].v;
            let asks = bound.rising_for() + (bound.v - x - TOL);
            next = Lin::c(bound.v.max(x + rg.until.min(asks)));
        }
        if next.v == f64::INFINITY || next.v > s.cub_suffix[m_block] + TOL {
            return infeasible(Verdict::Infeasible, iterations, backtracks, trace);
        }
        raised[m_block] = next;
        let Some(resume) = resume.filter(|&r| r <= n) else {
            return infeasible(Verdict::Infeasible, iterations, backtracks, trace);
        };
        backtracks += 1;
        iterations += 1;
        if backtracks > cfg.max_iter {
            return infeasible(Verdict::IterationLimit, iterations - 1, backtracks - 1, trace);
        }
        let key = (resume, raised.iter().map(|x| x.v.to_bits()).collect());
        if !seen.insert(key) {
            return infeasible(Verdict::Infeasible, iterations, backtracks, trace);
        }
        if anchor.is_none() || back_at_anchor || chain.contains(&m_block) {
            for x in &mut raised {
                *x = Lin::c(x.v);
            }
            for w in &mut snapshots {
                w.flatten();
            }
            // A chain that returns to its anchor independently of it is
            // driven by another trip; anchor on the one raised last instead.
            let a = match chain.last() {
                Some(&prev) if back_at_anchor && bound.s == 0 && prev != m_block => prev,
                _ => m_block,
            };
            raised[a].s = 1;
            anchor = Some(a);
            chain.clear();
            rg = Regime::new();
        }
        chain.push(m_block);
        cur = snapshots[resume].clone();
        for (l, r) in cur.lb.iter_mut().zip(&raised) {
            *l = rg.max(*l, *r);
        }
        s.propagate(&mut cur.lb, 0, &mut rg);
        n = resume;
    }

    let mut starts = Vec::new();
    let mut departures = Vec::with_capacity(s.n_trips);
    for (k, step) in s.steps.iter().enumerate() {
        match *step {
            Step::Order(i) => starts.push((i, chosen_cook[k], chosen_time[k])),
            Step::Trip(_) => departures.push((chosen_cook[k], chosen_time[k])),
        }
    }
    let total_delay = departures
        .iter()
        .enumerate()
        .map(|(m, &(_, d))| {
            s.trip_orders[m]
                .iter()
                .zip(&s.handover[m])
                .map(|(&i, &h)| ctx.order_delay(i, d, h))
                .sum::<f64>()
        })
        .sum();
    PdftResult {
        verdict: Verdict::Feasible,
        iterations,
        backtracks,
        solution: Some(AtpSolution {
            starts,
            departures,
            total_delay,
        }),
        trace,
    }
}

/// Materializes a feasible PDFT solution as a plan.
pub fn solution_to_plan(state: &State, pd: &PartialDecision, sol: &AtpSolution) -> Plan {
    let mut plan = state.plan.clone();
    for seq in plan.cook_sequences.iter_mut() {
        seq.retain(|&i| state.is_started(i));
    }
    plan.start_times.retain(|&i, _| state.is_started(i));
    for &(i, c, a) in &sol.starts {
        plan.cook_sequences[c].push(i);
        plan.start_times.insert(i, a);
    }
    for trips in plan.vehicle_trips.iter_mut() {
        trips.clear();
    }
    for (m, &(v, d)) in sol.departures.iter().enumerate() {
        plan.vehicle_trips[v].push(Trip {
            orders: pd.trips[m].clone(),
            departure: d,
        });
    }
    plan
}

/// Termination profile of many PDFT calls.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PdftStats {
    pub calls: u64,
    /// Counts by backtrack number for calls ending feasible.
    pub feasible: Vec<u64>,
    /// Counts by backtrack number for calls proven infeasible.
    pub infeasible: Vec<u64>,
    /// Calls rejected before any forward pass.
    pub immediate: u64,
    pub cap_hits: u64,
}

impl PdftStats {
    pub fn record(&mut self, r: &PdftResult) {
        self.calls += 1;
        if r.iterations == 0 {
            self.immediate += 1;
        }
        if r.verdict == Verdict::IterationLimit {
            self.cap_hits += 1;
            return;
        }
        let hist = if r.verdict == Verdict::Feasible {
            &mut self.feasible
        } else {
            &mut self.infeasible
        };
        if hist.len() <= r.backtracks {
            hist.resize(r.backtracks + 1, 0);
        }
        hist[r.backtracks] += 1;
    }

    pub fn merge(&mut self, other: &PdftStats) {
        self.calls += other.calls;
        self.immediate += other.immediate;
        self.cap_hits += other.cap_hits;
        for (dst, src) in [
            (&mut self.feasible, &other.feasible),
            (&mut self.infeasible, &other.infeasible),
        ] {
            if dst.len() < src.len() {
                dst.resize(src.len(), 0);
            }
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    fn count_at(&self, k: usize) -> u64 {
        self.feasible.get(k).copied().unwrap_or(0) + self.infeasible.get(k).copied().unwrap_or(0)
    }

    /// Fraction of calls that terminated with a verdict within `k`
    /// backtracks.
    pub fn within(&self, k: usize) -> f64 {
        if self.calls == 0 {
            return 1.0;
        }
        let n: u64 = (0..=k).map(|b| self.count_at(b)).sum();
        n as f64 / self.calls as f64
    }

    fn max_backtracks(&self) -> usize {
        self.feasible.len().max(self.infeasible.len()).saturating_sub(1)
    }

    pub fn cap_fraction(&self) -> f64 {
        if self.calls == 0 {
            0.0
        } else {
            self.cap_hits as f64 / self.calls as f64
        }
    }

    /// Cumulative termination percentage for each backtrack count.
    pub fn cumulative_percent(&self) -> Vec<(usize, f64)> {
        let mut acc = 0u64;
        (0..=self.max_backtracks())
            .map(|k| {
                acc += self.count_at(k);
                (k, 100.0 * acc as f64 / self.calls.max(1) as f64)
            })
            .collect()
    }
}

pub fn pdft_diagnostics<'a>(results: impl IntoIterator<Item = &'a PdftResult>) -> PdftStats {
    let mut stats = PdftStats::default();
    for r in results {
        stats.record(r);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{line_travel, small_cfg};
    use crate::model::{plan_delay, validate_decision, Order};

    fn ord(id: usize, ft: usize, t_order: f64, t_prep: f64, loc: usize) -> Order {
        Order {
            id,
            food_type: ft,
            t_order,
            t_prep,
            location: loc,
            service_time: 0.0,
        }
    }

    #[test]
    fn single_order_idle_system() {
        let cfg = small_cfg();
        let tt = line_travel(&[(1, 8.0)]);
        let orders = vec![ord(0, 0, 600.0, 10.0, 1)];
        let ctx = Ctx::new(&cfg, &tt, &orders).unwrap();
        let mut st = State::new(&cfg, 600.0, Some(0));
        st.plan.vehicle_return = vec![0.0; 2];
        let pd = PartialDecision {
            food_seqs: vec![vec![0], vec![]],
            trips: vec![vec![0]],
        };
        let atp = initial_atp_state(&ctx, &st, &pd).unwrap();
        assert_eq!(atp.lb, vec![600.0]);
        assert_eq!(atp.ub, vec![cfg.horizon]);
        assert_eq!(
            feasibility_window_order(&ctx, &pd, &atp, 0),
            Some((600.0, cfg.horizon - 10.0))
        );
        let r = run_pdft(&ctx, &st, &pd, PdftConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Feasible);
        assert_eq!(r.iterations, 1);
        let sol = r.solution.unwrap();
        assert_eq!(sol.starts, vec![(0, 0, 600.0)]);
        assert_eq!(sol.departures, vec![(0, 610.0)]);
        assert_eq!(sol.total_delay, 0.0);
        let plan = solution_to_plan(&st, &pd, &sol);
        validate_decision(&ctx, &st, &plan).unwrap();
    }

    fn started_state(cfg: &crate::ProblemConfig, vehicle_return: f64) -> State {
        let mut st = State::new(cfg, 600.0, Some(1));
        st.open_orders = vec![0];
        st.plan.cook_sequences[0].push(0);
        st.plan.start_times.insert(0, 590.0);
        st.plan.vehicle_return = vec![vehicle_return; 2];
        st
    }

    #[test]
    fn started_order_bounds_window() {
        let cfg = small_cfg();
        let tt = line_travel(&[(1, 8.0), (2, -3.0)]);
        let orders = vec![ord(0, 0, 580.0, 10.0, 1), ord(1, 1, 600.0, 5.0, 2)];
        let ctx = Ctx::new(&cfg, &tt, &orders).unwrap();
        let st = started_state(&cfg, 0.0);
        let pd = PartialDecision {
            food_seqs: vec![vec![0], vec![1]],
            trips: vec![vec![0], vec![1]],
        };
        let atp = initial_atp_state(&ctx, &st, &pd).unwrap();
        assert_eq!(atp.ub[0], 612.0);
        assert_eq!(atp.lb[0], 600.0);
        let r = run_pdft(&ctx, &st, &pd, PdftConfig::default()).unwrap();
        assert!(r.is_feasible());
    }

    #[test]
    fn window_inversion_is_immediate() {
        let cfg = small_cfg();
        let tt = line_travel(&[(1, 8.0)]);
        let orders = vec![ord(0, 0, 580.0, 10.0, 1), ord(1, 1, 600.0, 5.0, 1)];
        let ctx = Ctx::new(&cfg, &tt, &orders).unwrap();
        // Both vehicles busy until 613 while the started order must leave by 612.
        let st = started_state(&cfg, 613.0);
        let pd = PartialDecision {
            food_seqs: vec![vec![0], vec![1]],
            trips: vec![vec![0], vec![1]],
        };
        let atp = initial_atp_state(&ctx, &st, &pd).unwrap();
        assert!(atp.window_inverted());
        let r = run_pdft(&ctx, &st, &pd, PdftConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Infeasible);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn synchronization_raises_second_start() {
        // Order 0 is long finished and rides first; order 1 rides second in
        // the same trip and must start late enough to keep order 0 fresh.
        let cfg = small_cfg();
        let tt = line_travel(&[(1, 5.0), (2, 6.0)]);
        let orders = vec![ord(0, 0, 560.0, 10.0, 1), ord(1, 1, 600.0, 30.0, 2)];
        let ctx = Ctx::new(&cfg, &tt, &orders).unwrap();
        let mut st = State::new(&cfg, 600.0, Some(1));
        st.open_orders = vec![0];
        st.plan.cook_sequences[0].push(0);
        st.plan.start_times.insert(0, 580.0);
        st.plan.vehicle_return = vec![0.0; 2];
        let pd = PartialDecision {
            food_seqs: vec![vec![0], vec![1]],
            trips: vec![vec![1, 0]],
        };
        let r = run_pdft(&ctx, &st, &pd, PdftConfig::default()).unwrap();
        // Order 0 is ready at 590 and must arrive (1 km after stop 2 at 6 km,
        // offset 6 + 1 = 7) by 610, so the trip leaves by 603; order 1 needs
        // 30 minutes, so no schedule exists.
        assert_eq!(r.verdict, Verdict::Infeasible);

        let pd2 = PartialDecision {
            food_seqs: vec![vec![0], vec![1]],
            trips: vec![vec![0], vec![1]],
        };
        let r2 = run_pdft(&ctx, &st, &pd2, PdftConfig::default()).unwrap();
        let sol = r2.solution.unwrap();
        assert_eq!(sol.departures[0].1, 600.0);
        let plan = solution_to_plan(&st, &pd2, &sol);
        validate_decision(&ctx, &st, &plan).unwrap();
        assert!((plan_delay(&ctx, &plan).unwrap() - sol.total_delay).abs() < 1e-9);
    }

    #[test]
    fn diagnostics_histogram() {
        let r = PdftResult {
            verdict: Verdict::Feasible,
            iterations: 1,
            backtracks: 0,
            solution: None,
            trace: vec![],
        };
        let stats = pdft_diagnostics([&r, &r, &r]);
        assert_eq!(stats.cumulative_percent(), vec![(0, 100.0)]);
        assert_eq!(stats.within(0), 1.0);
        assert_eq!(stats.cap_fraction(), 0.0);
    }
}
