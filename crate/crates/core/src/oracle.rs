//! Brute-force reference solvers for tiny instances.
//!
//! [`oracle_atp`] solves the assignment and timing problem by enumerating
//! every cook and vehicle assignment. For a fixed assignment all constraints
//! are difference constraints between start and departure times, so the
//! componentwise least schedule is the longest-path solution from a time-zero
//! source (Bellman-Ford); a positive cycle means infeasible. Delay is
//! nondecreasing in departures, hence the least schedule is optimal for its
//! assignment and the minimum over assignments is exact.
//!
//! Nothing here shares code with the PDFT.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::OracleError;
use crate::geo::{ServiceTimeModel, TravelTimes, KITCHEN};
use crate::model::{Ctx, FoodType, Order, ProblemConfig, State, Trip};
use crate::pdft::PartialDecision;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCaps {
    pub max_orders: usize,
    pub max_trips: usize,
    pub max_cooks_per_type: usize,
    pub max_vehicles: usize,
    pub max_food_types: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_orders: 6,
            max_trips: 4,
            max_cooks_per_type: 2,
            max_vehicles: 2,
            max_food_types: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub delay: f64,
    pub starts: BTreeMap<usize, f64>,
    pub cooks: BTreeMap<usize, usize>,
    pub departures: Vec<f64>,
    pub vehicles: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OracleAtp {
    Infeasible,
    Feasible(OracleSolution),
}

impl OracleAtp {
    pub fn delay(&self) -> Option<f64> {
        match self {
            OracleAtp::Infeasible => None,
            OracleAtp::Feasible(s) => Some(s.delay),
        }
    }
}

/// Difference-constraint system `x[to] >= x[from] + w`; node 0 is time zero.
struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    fn new(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
        }
    }

    fn at_least(&mut self, x: usize, c: f64) {
        self.edges.push((0, x, c));
    }

    fn at_most(&mut self, x: usize, c: f64) {
        self.edges.push((x, 0, -c));
    }

    fn after(&mut self, to: usize, from: usize, w: f64) {
        self.edges.push((from, to, w));
    }

    /// Least solution, or `None` if the system is inconsistent.
    fn least(&self) -> Option<Vec<f64>> {
        let mut dist = vec![f64::NEG_INFINITY; self.n];
        dist[0] = 0.0;
        for round in 0..=self.n {
            let mut changed = false;
            for &(u, v, w) in &self.edges {
                if dist[u] > f64::NEG_INFINITY && dist[u] + w > dist[v] + TOL {
                    dist[v] = dist[u] + w;
                    changed = true;
                }
            }
            if !changed {
                return (dist[0] <= TOL).then_some(dist);
            }
            if round == self.n {
                return None;
            }
        }
        None
    }
}

/// Arrival and handover offsets of each stop and the trip duration,
/// computed from raw travel and service times.
fn stop_offsets(ctx: &Ctx, trip: &[usize]) -> (Vec<f64>, Vec<f64>, f64) {
    let svc = |i: usize| {
        if ctx.cfg.count_service_time {
            ctx.orders[i].service_time
        } else {
            0.0
        }
    };
    let mut arrive = Vec::new();
    let mut hand = Vec::new();
    let mut prev = KITCHEN;
    let mut t = 0.0;
    for &i in trip {
        let loc = ctx.orders[i].location;
        t += ctx.travel.travel_time(prev, loc).expect("known location");
        arrive.push(t);
        t += svc(i);
        hand.push(t);
        prev = loc;
    }
    let back = t + ctx.travel.travel_time(prev, KITCHEN).expect("known location");
    (arrive, hand, back)
}

fn started(state: &State, i: usize) -> Option<f64> {
    state
        .plan
        .start_times
        .get(&i)
        .copied()
        .filter(|&s| s < state.t_now)
}

/// Per cook, the time it is free of its started orders.
fn cook_free(ctx: &Ctx, state: &State) -> Vec<f64> {
    state
        .plan
        .cook_sequences
        .iter()
        .map(|seq| {
            let mut free = state.t_now;
            for &i in seq {
                if let Some(s) = started(state, i) {
                    free = free.max(s + ctx.orders[i].t_prep);
                }
            }
            free
        })
        .collect()
}

fn vehicle_free(state: &State) -> Vec<f64> {
    state
        .plan
        .vehicle_return
        .iter()
        .map(|&r| r.max(state.t_now))
        .collect()
}

fn check_caps(ctx: &Ctx, state: &State, n_trips: usize, caps: &OracleCaps) -> Result<(), OracleError> {
    let n = state.decision_orders().len();
    let cfg = ctx.cfg;
    let mut why = Vec::new();
    if n > caps.max_orders {
        why.push(format!("{n} orders"));
    }
    if n_trips > caps.max_trips {
        why.push(format!("{n_trips} trips"));
    }
    if cfg.food_types.len() > caps.max_food_types {
        why.push(format!("{} food types", cfg.food_types.len()));
    }
    if cfg.food_types.iter().any(|f| f.cooks > caps.max_cooks_per_type) {
        why.push("too many cooks per type".into());
    }
    if cfg.fleet_size > caps.max_vehicles {
        why.push(format!("{} vehicles", cfg.fleet_size));
    }
    if why.is_empty() {
        Ok(())
    } else {
        Err(OracleError::OverCaps(why.join(", ")))
    }
}

/// Calls `f` with every assignment of `items` slots to resources, where slot
/// `k` may use any resource in `choices[k]`. Among resources with identical
/// initial availability, an unused one is only taken if every lower-indexed
/// twin is already used; this skips relabelings of identical resources.
fn for_each_assignment(
    choices: &[Vec<usize>],
    initial: &[f64],
    f: &mut dyn FnMut(&[usize]),
) {
    fn rec(
        k: usize,
        choices: &[Vec<usize>],
        initial: &[f64],
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if k == choices.len() {
            f(cur);
            return;
        }
        for &r in &choices[k] {
            let redundant = !used[r]
                && choices[k]
                    .iter()
                    .any(|&r2| r2 < r && !used[r2] && initial[r2] == initial[r]);
            if redundant {
                continue;
            }
            let was = used[r];
            used[r] = true;
            cur.push(r);
            rec(k + 1, choices, initial, used, cur, f);
            cur.pop();
            used[r] = was;
        }
    }
    let mut used = vec![false; initial.len()];
    rec(0, choices, initial, &mut used, &mut Vec::new(), f);
}

/// Exact optimum of the assignment and timing problem for `pd`.
pub fn oracle_atp(
    ctx: &Ctx,
    state: &State,
    pd: &PartialDecision,
    caps: &OracleCaps,
) -> Result<OracleAtp, OracleError> {
    check_caps(ctx, state, pd.trips.len(), caps)?;
    let cfg = ctx.cfg;
    let unstarted: Vec<usize> = pd
        .food_seqs
        .iter()
        .flatten()
        .copied()
        .filter(|&i| started(state, i).is_none())
        .collect();
    let u = unstarted.len();
    let m_count = pd.trips.len();
    let node_of_order: BTreeMap<usize, usize> =
        unstarted.iter().enumerate().map(|(k, &i)| (i, k + 1)).collect();
    let trip_node = |m: usize| 1 + u + m;
    let offsets: Vec<_> = pd.trips.iter().map(|t| stop_offsets(ctx, t)).collect();
    let cfree = cook_free(ctx, state);
    let vfree = vehicle_free(state);

    let mut base = Graph::new(1 + u + m_count);
    for &i in &unstarted {
        base.at_least(node_of_order[&i], state.t_now);
    }
    for seq in &pd.food_seqs {
        let un: Vec<usize> = seq.iter().copied().filter(|&i| started(state, i).is_none()).collect();
        for w in un.windows(2) {
            base.after(node_of_order[&w[1]], node_of_order[&w[0]], 0.0);
        }
    }
    for (m, trip) in pd.trips.iter().enumerate() {
        let dn = trip_node(m);
        base.at_least(dn, state.t_now);
        base.at_most(dn, cfg.horizon);
        if m > 0 {
            base.after(dn, trip_node(m - 1), 0.0);
        }
        for (j, &i) in trip.iter().enumerate() {
            let o = &ctx.orders[i];
            let delta = cfg.food_types[o.food_type].freshness;
            let arrive = offsets[m].0[j];
            match started(state, i) {
                Some(s) => {
                    base.at_least(dn, s + o.t_prep);
                    base.at_most(dn, s + o.t_prep + delta - arrive);
                }
                None => {
                    let on = node_of_order[&i];
                    base.after(dn, on, o.t_prep);
                    base.after(on, dn, arrive - o.t_prep - delta);
                }
            }
        }
    }

    let cook_choices: Vec<Vec<usize>> = unstarted
        .iter()
        .map(|&i| cfg.cooks_of(ctx.orders[i].food_type).collect())
        .collect();
    let vehicle_choices: Vec<Vec<usize>> = vec![(0..cfg.fleet_size).collect(); m_count];

    let mut best: Option<OracleSolution> = None;
    for_each_assignment(&cook_choices, &cfree, &mut |cooks| {
        let mut g1 = Graph {
            n: base.n,
            edges: base.edges.clone(),
        };
        let mut last_on_cook: Vec<Option<usize>> = vec![None; cfree.len()];
        for (k, &c) in cooks.iter().enumerate() {
            let i = unstarted[k];
            let on = node_of_order[&i];
            g1.at_least(on, cfree[c]);
            if let Some(prev) = last_on_cook[c] {
                g1.after(on, node_of_order[&prev], ctx.orders[prev].t_prep);
            }
            last_on_cook[c] = Some(i);
        }
        for_each_assignment(&vehicle_choices, &vfree, &mut |vehicles| {
            let mut g = Graph {
                n: g1.n,
                edges: g1.edges.clone(),
            };
            let mut last_trip: Vec<Option<usize>> = vec![None; vfree.len()];
            for (m, &v) in vehicles.iter().enumerate() {
                g.at_least(trip_node(m), vfree[v]);
                if let Some(prev) = last_trip[v] {
                    g.after(trip_node(m), trip_node(prev), offsets[prev].2);
                }
                last_trip[v] = Some(m);
            }
            let Some(x) = g.least() else { return };
            let departures: Vec<f64> = (0..m_count).map(|m| x[trip_node(m)]).collect();
            let mut delay = 0.0;
            for (m, trip) in pd.trips.iter().enumerate() {
                for (j, &i) in trip.iter().enumerate() {
                    let o = &ctx.orders[i];
                    delay += (departures[m] + offsets[m].1[j] - o.t_order - cfg.tau).max(0.0);
                }
            }
            if best.as_ref().is_none_or(|b| delay < b.delay - TOL) {
                best = Some(OracleSolution {
                    delay,
                    starts: unstarted.iter().map(|&i| (i, x[node_of_order[&i]])).collect(),
                    cooks: unstarted.iter().copied().zip(cooks.iter().copied()).collect(),
                    departures,
                    vehicles: vehicles.to_vec(),
                });
            }
        });
    });
    Ok(match best {
        Some(s) => OracleAtp::Feasible(s),
        None => OracleAtp::Infeasible,
    })
}

/// Calls `f` with every permutation of `items`.
pub fn for_each_permutation<T: Clone>(items: &[T], f: &mut dyn FnMut(&[T])) {
    fn rec<T: Clone>(k: usize, v: &mut Vec<T>, f: &mut dyn FnMut(&[T])) {
        if k == v.len() {
            f(v);
            return;
        }
        for j in k..v.len() {
            v.swap(k, j);
            rec(k + 1, v, f);
            v.swap(k, j);
        }
    }
    let mut v = items.to_vec();
    rec(0, &mut v, f);
}

/// All compositions of `n` into ordered parts of size `1..=max_part`.
pub fn compositions(n: usize, max_part: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=max_part.min(n) {
        for mut rest in compositions(n - first, max_part) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Number of partial decisions: food sequences times ordered trip sequences.
pub fn partial_decision_count(unstarted_per_type: &[usize], n_orders: usize, capacity: usize) -> usize {
    let fact = |n: usize| (1..=n).product::<usize>();
    let food: usize = unstarted_per_type.iter().map(|&k| fact(k)).product();
    food * fact(n_orders) * compositions(n_orders, capacity).len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSpaceResult {
    pub enumerated: usize,
    pub feasible: usize,
    pub best: Option<(PartialDecision, f64)>,
}

/// Calls `f` with every partial decision of the state.
pub fn for_each_partial_decision(ctx: &Ctx, state: &State, f: &mut dyn FnMut(&PartialDecision)) {
    let orders = state.decision_orders();
    let n_types = ctx.cfg.food_types.len();
    let mut prefixes = Vec::new();
    let mut free = Vec::new();
    for ft in 0..n_types {
        let of_type: Vec<usize> = orders
            .iter()
            .copied()
            .filter(|&i| ctx.orders[i].food_type == ft)
            .collect();
        let mut st: Vec<(f64, usize, usize)> = of_type
            .iter()
            .filter_map(|&i| {
                started(state, i).map(|s| (s, state.plan.cook_of(i).unwrap_or(usize::MAX), i))
            })
            .collect();
        st.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        prefixes.push(st.into_iter().map(|x| x.2).collect::<Vec<_>>());
        free.push(
            of_type
                .into_iter()
                .filter(|&i| started(state, i).is_none())
                .collect::<Vec<_>>(),
        );
    }
    let comps = compositions(orders.len(), ctx.cfg.capacity);

    fn foods(
        ft: usize,
        prefixes: &[Vec<usize>],
        free: &[Vec<usize>],
        acc: &mut Vec<Vec<usize>>,
        f: &mut dyn FnMut(&[Vec<usize>]),
    ) {
        if ft == free.len() {
            f(acc);
            return;
        }
        for_each_permutation(&free[ft], &mut |perm| {
            let mut seq = prefixes[ft].clone();
            seq.extend_from_slice(perm);
            acc.push(seq);
            foods(ft + 1, prefixes, free, acc, f);
            acc.pop();
        });
    }

    foods(0, &prefixes, &free, &mut Vec::new(), &mut |food_seqs| {
        for_each_permutation(&orders, &mut |perm| {
            for comp in &comps {
                let mut trips = Vec::with_capacity(comp.len());
                let mut k = 0;
                for &len in comp {
                    trips.push(perm[k..k + len].to_vec());
                    k += len;
                }
                f(&PartialDecision {
                    food_seqs: food_seqs.to_vec(),
                    trips,
                });
            }
        });
    });
}

/// Minimum immediate cost over every partial decision of the state.
pub fn oracle_decision_space(
    ctx: &Ctx,
    state: &State,
    caps: &OracleCaps,
) -> Result<DecisionSpaceResult, OracleError> {
    check_caps(ctx, state, 0, caps)?;
    let mut res = DecisionSpaceResult {
        enumerated: 0,
        feasible: 0,
        best: None,
    };
    let mut err = None;
    for_each_partial_decision(ctx, state, &mut |pd| {
        res.enumerated += 1;
        if pd.trips.len() > caps.max_trips {
            return;
        }
        match oracle_atp(ctx, state, pd, caps) {
            Ok(OracleAtp::Feasible(s)) => {
                res.feasible += 1;
                if res.best.as_ref().is_none_or(|(_, c)| s.delay < *c - TOL) {
                    res.best = Some((pd.clone(), s.delay));
                }
            }
            Ok(OracleAtp::Infeasible) => {}
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(res),
    }
}

/// A decision in original form: explicit cook and vehicle sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginalDecision {
    /// Per cook, the unstarted orders it prepares after its started ones.
    pub cook_seqs: Vec<Vec<usize>>,
    /// Per vehicle, its trips in departure order.
    pub vehicle_trips: Vec<Vec<Vec<usize>>>,
}

pub fn sample_original_decision<R: Rng + ?Sized>(
    ctx: &Ctx,
    state: &State,
    rng: &mut R,
) -> OriginalDecision {
    let cfg = ctx.cfg;
    let mut orders = state.decision_orders();
    let mut cook_seqs = vec![Vec::new(); cfg.num_cooks()];
    for &i in &orders {
        if started(state, i).is_none() {
            let cooks = cfg.cooks_of(ctx.orders[i].food_type);
            let c = rng.random_range(cooks);
            cook_seqs[c].push(i);
        }
    }
    for seq in &mut cook_seqs {
        seq.shuffle(rng);
    }
    orders.shuffle(rng);
    let mut vehicle_trips = vec![Vec::new(); cfg.fleet_size];
    let mut k = 0;
    while k < orders.len() {
        let len = rng.random_range(1..=cfg.capacity.min(orders.len() - k));
        let v = rng.random_range(0..cfg.fleet_size);
        vehicle_trips[v].push(orders[k..k + len].to_vec());
        k += len;
    }
    for trips in &mut vehicle_trips {
        trips.shuffle(rng);
    }
    OriginalDecision {
        cook_seqs,
        vehicle_trips,
    }
}

/// Least delay of an original decision, `None` if it cannot be timed.
pub fn time_original(ctx: &Ctx, state: &State, d: &OriginalDecision) -> Option<f64> {
    let cfg = ctx.cfg;
    let unstarted: Vec<usize> = d.cook_seqs.iter().flatten().copied().collect();
    let node: BTreeMap<usize, usize> = unstarted.iter().enumerate().map(|(k, &i)| (i, k + 1)).collect();
    let trips: Vec<(usize, &Vec<usize>)> = d
        .vehicle_trips
        .iter()
        .enumerate()
        .flat_map(|(v, ts)| ts.iter().map(move |t| (v, t)))
        .collect();
    let base = 1 + unstarted.len();
    let mut g = Graph::new(base + trips.len());
    let cfree = cook_free(ctx, state);
    let vfree = vehicle_free(state);
    for (c, seq) in d.cook_seqs.iter().enumerate() {
        for (k, &i) in seq.iter().enumerate() {
            g.at_least(node[&i], cfree[c]);
            if k > 0 {
                g.after(node[&i], node[&seq[k - 1]], ctx.orders[seq[k - 1]].t_prep);
            }
        }
    }
    let mut offsets = Vec::with_capacity(trips.len());
    let mut prev_of_vehicle: Vec<Option<usize>> = vec![None; cfg.fleet_size];
    for (m, &(v, trip)) in trips.iter().enumerate() {
        let dn = base + m;
        let off = stop_offsets(ctx, trip);
        g.at_least(dn, vfree[v]);
        g.at_most(dn, cfg.horizon);
        if let Some(p) = prev_of_vehicle[v] {
            let prev: &(Vec<f64>, Vec<f64>, f64) = &offsets[p];
            g.after(dn, base + p, prev.2);
        }
        prev_of_vehicle[v] = Some(m);
        for (j, &i) in trip.iter().enumerate() {
            let o = &ctx.orders[i];
            let delta = cfg.food_types[o.food_type].freshness;
            match started(state, i) {
                Some(s) => {
                    g.at_least(dn, s + o.t_prep);
                    g.at_most(dn, s + o.t_prep + delta - off.0[j]);
                }
                None => {
                    g.after(dn, node[&i], o.t_prep);
                    g.after(node[&i], dn, off.0[j] - o.t_prep - delta);
                }
            }
        }
        offsets.push(off);
    }
    let x = g.least()?;
    let mut delay = 0.0;
    for (m, &(_, trip)) in trips.iter().enumerate() {
        for (j, &i) in trip.iter().enumerate() {
            let o = &ctx.orders[i];
            delay += (x[base + m] + offsets[m].1[j] - o.t_order - cfg.tau).max(0.0);
        }
    }
    Some(delay)
}

/// Self-contained tiny instance: configuration, travel, orders and a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub cfg: ProblemConfig,
    pub travel: TravelTimes,
    pub orders: Vec<Order>,
    pub state: State,
}

impl Instance {
    pub fn ctx(&self) -> Ctx<'_> {
        Ctx::new(&self.cfg, &self.travel, &self.orders).expect("consistent instance")
    }
}

/// Two food types with one cook each and three vehicles at t = 600. Orders 0
/// and 1 are in preparation and share a trip on vehicle 0; order 3 waits for
/// vehicle 1 (back at 620) and order 2 for vehicle 2 (back at 630). New
/// order 4 is of the first food type and lives next to order 3.
///
/// FIFO prepares order 4 after order 2 and sends it alone on vehicle 0 at
/// 630, 8 minutes late. Preparing it before order 2 and bundling it with
/// order 3 delivers both on time at the cost of a smaller delay for order 2.
pub fn figure_one_instance() -> Instance {
    let cfg = ProblemConfig {
        food_types: vec![
            FoodType {
                name: "german".into(),
                freshness: 20.0,
                cooks: 1,
            },
            FoodType {
                name: "us".into(),
                freshness: 20.0,
                cooks: 1,
            },
        ],
        fleet_size: 3,
        capacity: 3,
        tau: 30.0,
        capture_horizon: 1440.0,
        horizon: 1560.0,
        count_service_time: true,
    };
    let m = vec![
        vec![0.0, 5.0, 4.0, 10.0, 8.0, 8.0],
        vec![5.0, 0.0, 2.0, 12.0, 10.0, 10.0],
        vec![4.0, 2.0, 0.0, 12.0, 10.0, 10.0],
        vec![10.0, 12.0, 12.0, 0.0, 15.0, 15.0],
        vec![8.0, 10.0, 10.0, 15.0, 0.0, 1.0],
        vec![8.0, 10.0, 10.0, 15.0, 1.0, 0.0],
    ];
    let travel = TravelTimes::from_matrix(&[0, 1, 2, 3, 4, 5], m, ServiceTimeModel::default())
        .expect("valid matrix");
    let order = |id: usize, food_type: usize, t_order: f64, t_prep: f64| Order {
        id,
        food_type,
        t_order,
        t_prep,
        location: id + 1,
        service_time: 0.0,
    };
    let orders = vec![
        order(0, 0, 585.0, 10.0),
        order(1, 1, 586.0, 6.0),
        order(2, 0, 599.0, 10.0),
        order(3, 1, 598.0, 8.0),
        order(4, 0, 600.0, 8.0),
    ];
    let mut state = State::new(&cfg, 600.0, Some(4));
    state.open_orders = vec![0, 1, 2, 3];
    state.plan.cook_sequences = vec![vec![0, 2], vec![1, 3]];
    state.plan.start_times = BTreeMap::from([(0, 595.0), (1, 596.0), (2, 612.0), (3, 602.0)]);
    let trip = |orders: Vec<usize>, departure: f64| Trip { orders, departure };
    state.plan.vehicle_trips = vec![
        vec![trip(vec![1, 0], 605.0)],
        vec![trip(vec![3], 620.0)],
        vec![trip(vec![2], 630.0)],
    ];
    state.plan.vehicle_return = vec![600.0, 620.0, 630.0];
    Instance {
        cfg,
        travel,
        orders,
        state,
    }
}

/// Shape of randomly generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceShape {
    pub max_orders: usize,
    pub max_food_types: usize,
    pub max_cooks_per_type: usize,
    pub max_vehicles: usize,
    pub max_capacity: usize,
    /// Probability that a cook has a started order.
    pub started_prob: f64,
}

impl InstanceShape {
    pub fn atp() -> Self {
        InstanceShape {
            max_orders: 6,
            max_food_types: 3,
            max_cooks_per_type: 2,
            max_vehicles: 2,
            max_capacity: 3,
            started_prob: 0.4,
        }
    }

    pub fn tiny() -> Self {
        InstanceShape {
            max_orders: 4,
            max_food_types: 2,
            max_cooks_per_type: 2,
            max_vehicles: 2,
            max_capacity: 3,
            started_prob: 0.3,
        }
    }
}

fn random_matrix<R: Rng + ?Sized>(n_customers: usize, rng: &mut R) -> TravelTimes {
    let n = n_customers + 1;
    let mut m = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let t = (rng.random_range(2.0..12.0f64) * 4.0).round() / 4.0;
            m[a][b] = t;
            m[b][a] = t;
        }
    }
    let ids: Vec<usize> = (0..n).collect();
    TravelTimes::from_matrix(&ids, m, ServiceTimeModel::default()).expect("valid matrix")
}

/// Random instance: orders at random locations, some preparations already
/// under way, vehicles returning shortly after now.
pub fn random_instance<R: Rng + ?Sized>(shape: &InstanceShape, rng: &mut R) -> Instance {
    let n_types = rng.random_range(1..=shape.max_food_types);
    let fleet = rng.random_range(1..=shape.max_vehicles);
    let capacity = rng.random_range(1..=shape.max_capacity);
    let cfg = ProblemConfig {
        food_types: (0..n_types)
            .map(|f| FoodType {
                name: format!("f{f}"),
                freshness: rng.random_range(12.0..25.0f64).round(),
                cooks: rng.random_range(1..=shape.max_cooks_per_type),
            })
            .collect(),
        fleet_size: fleet,
        capacity,
        tau: 30.0,
        capture_horizon: 1440.0,
        horizon: 1560.0,
        count_service_time: true,
    };
    let min_orders = 1;
    let max_orders = shape.max_orders.min(4 * capacity);
    let n = rng.random_range(min_orders..=max_orders);
    let t_now = 600.0;
    let travel = random_matrix(n, rng);
    let mut orders: Vec<Order> = (0..n)
        .map(|k| Order {
            id: k,
            food_type: rng.random_range(0..n_types),
            t_order: (rng.random_range(565.0..600.0f64) * 2.0).round() / 2.0,
            t_prep: rng.random_range(3.0..12.0f64).round(),
            location: k + 1,
            service_time: (rng.random_range(0.0..4.0f64) * 2.0).round() / 2.0,
        })
        .collect();
    orders.sort_by(|a, b| a.t_order.total_cmp(&b.t_order));
    for (k, o) in orders.iter_mut().enumerate() {
        o.id = k;
        o.location = k + 1;
    }
    // The most recent order is the new one; the rest are already planned.
    orders.last_mut().expect("at least one order").t_order = t_now;
    let mut state = State::new(&cfg, t_now, Some(n - 1));
    state.open_orders = (0..n - 1).collect();
    state.plan.vehicle_return = (0..fleet)
        .map(|_| (rng.random_range(590.0..630.0f64) * 2.0).round() / 2.0)
        .collect();
    // Started preparations: at most one per cook, among the planned orders.
    let mut used = vec![false; n];
    for c in 0..cfg.num_cooks() {
        if !rng.random_bool(shape.started_prob) {
            continue;
        }
        let ft = cfg.cook_food_type(c);
        let cand: Vec<usize> = (0..n - 1)
            .filter(|&i| !used[i] && orders[i].food_type == ft)
            .collect();
        if let Some(&i) = cand.first() {
            used[i] = true;
            let start = t_now - rng.random_range(1.0..15.0f64).round();
            state.plan.cook_sequences[c].push(i);
            state.plan.start_times.insert(i, start);
        }
    }
    Instance {
        cfg,
        travel,
        orders,
        state,
    }
}

/// Random partial decision of the instance's state with at most `max_trips`
/// trips.
pub fn random_partial_decision<R: Rng + ?Sized>(
    inst: &Instance,
    max_trips: usize,
    rng: &mut R,
) -> PartialDecision {
    let ctx = inst.ctx();
    let st = &inst.state;
    let orders = st.decision_orders();
    let food_seqs = (0..inst.cfg.food_types.len())
        .map(|f| {
            let of_type: Vec<usize> = orders
                .iter()
                .copied()
                .filter(|&i| ctx.orders[i].food_type == f)
                .collect();
            let mut seq = crate::pdft::started_in_order(st, &of_type);
            let mut rest: Vec<usize> = of_type.into_iter().filter(|&i| !st.is_started(i)).collect();
            rest.shuffle(rng);
            seq.extend(rest);
            seq
        })
        .collect();
    let mut perm = orders.clone();
    perm.shuffle(rng);
    let comps: Vec<Vec<usize>> = compositions(perm.len(), inst.cfg.capacity)
        .into_iter()
        .filter(|c| c.len() <= max_trips)
        .collect();
    let comp = &comps[rng.random_range(0..comps.len())];
    let mut trips = Vec::new();
    let mut k = 0;
    for &len in comp {
        trips.push(perm[k..k + len].to_vec());
        k += len;
    }
    PartialDecision { food_seqs, trips }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub condensed_best: Option<f64>,
    pub sampled: usize,
    pub sampled_feasible: usize,
    pub best_sampled: Option<f64>,
    pub counterexamples: usize,
}

/// Compares the condensed-space optimum against sampled original decisions.
pub fn theorem1_witness<R: Rng + ?Sized>(
    inst: &Instance,
    samples: usize,
    rng: &mut R,
) -> Result<Theorem1Report, OracleError> {
    let ctx = inst.ctx();
    let caps = OracleCaps {
        max_trips: usize::MAX,
        ..OracleCaps::default()
    };
    let space = oracle_decision_space(&ctx, &inst.state, &caps)?;
    let condensed_best = space.best.map(|(_, c)| c);
    let mut rep = Theorem1Report {
        condensed_best,
        sampled: samples,
        sampled_feasible: 0,
        best_sampled: None,
        counterexamples: 0,
    };
    for _ in 0..samples {
        let d = sample_original_decision(&ctx, &inst.state, rng);
        if let Some(c) = time_original(&ctx, &inst.state, &d) {
            rep.sampled_feasible += 1;
            rep.best_sampled = Some(rep.best_sampled.map_or(c, |b: f64| b.min(c)));
            if condensed_best.is_none_or(|b| c < b - 1e-6) {
                rep.counterexamples += 1;
            }
        }
    }
    Ok(rep)
}

/// Instance satisfying the sorted-preparation hypothesis: one food type
/// with a single cook, unstarted orders whose deadlines and preparation times
/// are sorted alike, no service times, and an idle vehicle for every order.
///
/// The exchange argument behind the claim needs one preparation sequence.
/// With two cooks, starting a long order first on the second cook can beat
/// the sorted order.
pub fn claim_a1_instance<R: Rng + ?Sized>(rng: &mut R) -> Instance {
    let n = rng.random_range(2..=4);
    let cooks = 1;
    let cfg = ProblemConfig {
        food_types: vec![FoodType {
            name: "f0".into(),
            freshness: 30.0,
            cooks,
        }],
        fleet_size: n,
        capacity: 1,
        tau: 30.0,
        capture_horizon: 1440.0,
        horizon: 1560.0,
        count_service_time: false,
    };
    let travel = random_matrix(n, rng);
    let t_now = 600.0;
    let mut raw: Vec<(f64, f64, usize)> = (0..n)
        .map(|k| {
            let t_order = (rng.random_range(560.0..600.0f64) * 2.0).round() / 2.0;
            let dl = t_order + 30.0 - travel.travel_time(KITCHEN, k + 1).unwrap();
            (dl, t_order, k + 1)
        })
        .collect();
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut preps: Vec<f64> = (0..n).map(|_| rng.random_range(3.0..15.0f64).round()).collect();
    preps.sort_by(f64::total_cmp);
    let orders: Vec<Order> = raw
        .iter()
        .zip(&preps)
        .enumerate()
        .map(|(id, (&(_, t_order, loc), &t_prep))| Order {
            id,
            food_type: 0,
            t_order,
            t_prep,
            location: loc,
            service_time: 0.0,
        })
        .collect();
    let mut state = State::new(&cfg, t_now, Some(n - 1));
    state.open_orders = (0..n - 1).collect();
    state.plan.vehicle_return = vec![t_now; n];
    Instance {
        cfg,
        travel,
        orders,
        state,
    }
}

/// Deadline `t_order + tau - direct drive` of an order.
pub fn deadline(ctx: &Ctx, i: usize) -> f64 {
    ctx.orders[i].t_order + ctx.cfg.tau
        - ctx.travel.travel_time(KITCHEN, ctx.orders[i].location).expect("known location")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub global_best: f64,
    pub claimed_best: f64,
}

impl ClaimReport {
    pub fn holds(&self) -> bool {
        self.claimed_best <= self.global_best + 1e-6
    }
}

/// Best cost over single-order-trip decisions whose food sequences satisfy
/// `keep`.
fn best_singleton(
    inst: &Instance,
    keep: &dyn Fn(&PartialDecision) -> bool,
) -> f64 {
    let ctx = inst.ctx();
    let caps = OracleCaps {
        max_vehicles: usize::MAX,
        max_trips: usize::MAX,
        ..OracleCaps::default()
    };
    let mut best = f64::INFINITY;
    for_each_partial_decision(&ctx, &inst.state, &mut |pd| {
        if pd.trips.iter().any(|t| t.len() != 1) || !keep(pd) {
            return;
        }
        if let Ok(OracleAtp::Feasible(s)) = oracle_atp(&ctx, &inst.state, pd, &caps) {
            best = best.min(s.delay);
        }
    });
    best
}

/// Sorted preparation: restricting the food sequence to ascending deadline
/// order loses nothing.
pub fn claim_a1_check(inst: &Instance) -> ClaimReport {
    let ctx = inst.ctx();
    let global_best = best_singleton(inst, &|_| true);
    let claimed_best = best_singleton(inst, &|pd| {
        pd.food_seqs[0]
            .windows(2)
            .all(|w| deadline(&ctx, w[0]) <= deadline(&ctx, w[1]))
    });
    ClaimReport {
        global_best,
        claimed_best,
    }
}

/// Instance satisfying the shortest-round-trip hypothesis: every order is
/// prepared, late whatever happens, served by single-order trips of one
/// vehicle, with nothing arriving afterwards.
pub fn claim_a2_instance<R: Rng + ?Sized>(rng: &mut R) -> Instance {
    let n = rng.random_range(2..=4);
    let cfg = ProblemConfig {
        food_types: vec![FoodType {
            name: "f0".into(),
            freshness: 240.0,
            cooks: n,
        }],
        fleet_size: 1,
        capacity: 1,
        tau: 30.0,
        capture_horizon: 1440.0,
        horizon: 1560.0,
        count_service_time: false,
    };
    let travel = random_matrix(n, rng);
    let t_now = cfg.capture_horizon;
    let orders: Vec<Order> = (0..n)
        .map(|id| Order {
            id,
            food_type: 0,
            t_order: t_now - 60.0 - rng.random_range(0.0..20.0f64).round(),
            t_prep: rng.random_range(3.0..12.0f64).round(),
            location: id + 1,
            service_time: 0.0,
        })
        .collect();
    let mut state = State::new(&cfg, t_now, None);
    state.open_orders = (0..n).collect();
    for (i, o) in orders.iter().enumerate() {
        state.plan.cook_sequences[i].push(i);
        state.plan.start_times.insert(i, t_now - 20.0 - o.t_prep);
    }
    state.plan.vehicle_return = vec![t_now + rng.random_range(0.0..10.0f64).round()];
    Instance {
        cfg,
        travel,
        orders,
        state,
    }
}

/// Shortest round trip first: restricting the trip sequence to ascending
/// round-trip times loses nothing.
pub fn claim_a2_check(inst: &Instance) -> ClaimReport {
    let ctx = inst.ctx();
    let round = |i: usize| {
        let loc = ctx.orders[i].location;
        ctx.travel.travel_time(KITCHEN, loc).unwrap() + ctx.travel.travel_time(loc, KITCHEN).unwrap()
    };
    let global_best = best_singleton(inst, &|_| true);
    let claimed_best = best_singleton(inst, &|pd| {
        pd.trips.windows(2).all(|w| round(w[0][0]) <= round(w[1][0]))
    });
    ClaimReport {
        global_best,
        claimed_best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_order_idle_optimum() {
        let cfg = ProblemConfig {
            food_types: vec![FoodType {
                name: "a".into(),
                freshness: 20.0,
                cooks: 1,
            }],
            fleet_size: 1,
            capacity: 1,
            tau: 30.0,
            capture_horizon: 1440.0,
            horizon: 1560.0,
            count_service_time: true,
        };
        let travel = TravelTimes::from_matrix(
            &[0, 1],
            vec![vec![0.0, 15.0], vec![15.0, 0.0]],
            ServiceTimeModel::default(),
        )
        .unwrap();
        let orders = vec![Order {
            id: 0,
            food_type: 0,
            t_order: 600.0,
            t_prep: 12.0,
            location: 1,
            service_time: 4.0,
        }];
        let mut state = State::new(&cfg, 600.0, Some(0));
        state.plan.vehicle_return = vec![0.0];
        let ctx = Ctx::new(&cfg, &travel, &orders).unwrap();
        let pd = PartialDecision {
            food_seqs: vec![vec![0]],
            trips: vec![vec![0]],
        };
        let r = oracle_atp(&ctx, &state, &pd, &OracleCaps::default()).unwrap();
        // Delay = prep + travel + service - tau = 12 + 15 + 4 - 30.
        assert!((r.delay().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decision_space_counts() {
        let cfg = ProblemConfig {
            food_types: vec![FoodType {
                name: "a".into(),
                freshness: 60.0,
                cooks: 1,
            }],
            fleet_size: 1,
            capacity: 2,
            tau: 30.0,
            capture_horizon: 1440.0,
            horizon: 1560.0,
            count_service_time: true,
        };
        let travel = random_matrix(3, &mut ChaCha8Rng::seed_from_u64(1));
        let orders: Vec<Order> = (0..3)
            .map(|id| Order {
                id,
                food_type: 0,
                t_order: 600.0,
                t_prep: 5.0,
                location: id + 1,
                service_time: 0.0,
            })
            .collect();
        let mut state = State::new(&cfg, 600.0, Some(2));
        state.open_orders = vec![0, 1];
        state.plan.vehicle_return = vec![600.0];
        let ctx = Ctx::new(&cfg, &travel, &orders).unwrap();
        let mut count = 0;
        for_each_partial_decision(&ctx, &state, &mut |_| count += 1);
        assert_eq!(count, partial_decision_count(&[3], 3, 2));
        assert_eq!(count, 6 * 6 * 3);

        let mut one = State::new(&cfg, 600.0, Some(0));
        one.plan.vehicle_return = vec![600.0];
        let orders1 = &orders[..1];
        let ctx1 = Ctx::new(&cfg, &travel, orders1).unwrap();
        let r = oracle_decision_space(&ctx1, &one, &OracleCaps::default()).unwrap();
        assert_eq!(r.enumerated, 1);
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 2).len(), 3);
        assert_eq!(compositions(4, 3).len(), 7);
        assert_eq!(compositions(0, 3).len(), 1);
    }

    #[test]
    fn over_caps_refused() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut inst = random_instance(&InstanceShape::atp(), &mut rng);
        inst.cfg.fleet_size = 3;
        inst.state.plan.vehicle_return.push(600.0);
        let pd = random_partial_decision(&inst, 4, &mut rng);
        assert!(oracle_atp(&inst.ctx(), &inst.state, &pd, &OracleCaps::default()).is_err());
    }
}
