//! Event-driven simulation of sticky particles.
//!
//! Clusters fly freely between events. Adjacent clusters that meet merge
//! with momentum conservation; a cluster reaching a boundary point of the
//! domain is absorbed there with zero velocity and stays forever. Only
//! adjacent pairs are ever scheduled: order is preserved in one dimension,
//! so non-adjacent clusters cannot meet before an adjacent pair does.
//!
//! A free cluster is stored through the sums `Σ mᵢ`, `Σ mᵢxᵢ` and
//! `Σ mᵢvᵢ` over its member atoms (initial data), so its position at time
//! `t` is `(Σ mᵢxᵢ + t Σ mᵢvᵢ) / Σ mᵢ` with no accumulated drift.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::quantile::{Atom, ParticleState};
use crate::scalar::{Scalar, FLOAT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    pub mass: T,
    /// `Σ mᵢ vᵢ(0)` over members.
    pub initial_momentum: T,
    /// `Σ mᵢ xᵢ(0)` over members.
    pub initial_moment: T,
    /// Sorted indices into the initial atom list.
    pub members: Vec<usize>,
    /// Boundary point the cluster is stuck to, if absorbed.
    pub wall: Option<T>,
    pub component: usize,
}

impl<T: Scalar> Cluster<T> {
    pub fn from_atom(index: usize, atom: &Atom<T>, component: usize) -> Self {
        Self {
            mass: atom.mass.clone(),
            initial_momentum: atom.mass.clone() * atom.velocity.clone(),
            initial_moment: atom.mass.clone() * atom.position.clone(),
            members: vec![index],
            wall: None,
            component,
        }
    }

    pub fn is_absorbed(&self) -> bool {
        self.wall.is_some()
    }

    pub fn velocity(&self) -> T {
        if self.wall.is_some() {
            T::zero()
        } else {
            self.initial_momentum.clone() / self.mass.clone()
        }
    }

    /// Position extrapolated back to `t = 0` along the current free flight.
    fn anchor(&self) -> T {
        self.initial_moment.clone() / self.mass.clone()
    }

    pub fn position_at(&self, t: &T) -> T {
        match &self.wall {
            Some(w) => w.clone(),
            None => {
                (self.initial_moment.clone() + self.initial_momentum.clone() * t.clone())
                    / self.mass.clone()
            }
        }
    }
}

/// Momentum-conserving merge. With `wall` set (or any participant already
/// absorbed) the result is stuck at the wall with zero velocity.
pub fn merge<T: Scalar>(participants: &[Cluster<T>], wall: Option<T>) -> Cluster<T> {
    assert!(!participants.is_empty());
    let wall = wall.or_else(|| participants.iter().find_map(|c| c.wall.clone()));
    let mut members: Vec<usize> = participants
        .iter()
        .flat_map(|c| c.members.iter().copied())
        .collect();
    members.sort_unstable();
    let sum = |f: fn(&Cluster<T>) -> &T| {
        participants
            .iter()
            .fold(T::zero(), |acc, c| acc + f(c).clone())
    };
    Cluster {
        mass: sum(|c| &c.mass),
        initial_momentum: sum(|c| &c.initial_momentum),
        initial_moment: sum(|c| &c.initial_moment),
        members,
        wall,
        component: participants[0].component,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    InteriorMerge,
    WallAbsorption,
}

#[derive(Debug, Clone)]
pub struct CollisionEvent<T> {
    pub time: T,
    pub position: T,
    /// Clusters as they were just before the event, ordered by position.
    pub participants: Vec<Cluster<T>>,
    pub resulting: Cluster<T>,
    pub kind: EventKind,
}

/// Live clusters during the free flight that starts at `time`.
#[derive(Debug, Clone)]
pub struct Epoch<T> {
    pub time: T,
    pub clusters: Vec<Cluster<T>>,
}

/// Cluster evaluated at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterView<T> {
    pub mass: T,
    pub position: T,
    pub velocity: T,
    pub members: Vec<usize>,
    pub absorbed: bool,
    pub component: usize,
    pub initial_momentum: T,
}

#[derive(Debug, Clone)]
pub struct EventLog<T: Scalar> {
    pub initial: ParticleState<T>,
    pub domain: Domain<T>,
    pub events: Vec<CollisionEvent<T>>,
    pub epochs: Vec<Epoch<T>>,
    pub horizon: Option<T>,
    /// Time after which no further event occurs (absent if the horizon cut the run short).
    pub equilibrium_time: Option<T>,
    pub atom_components: Vec<usize>,
}

impl<T: Scalar> EventLog<T> {
    fn check_time(&self, t: &T) -> Result<()> {
        if *t < T::zero() {
            return Err(Error::NegativeTime(t.to_f64()));
        }
        if self.equilibrium_time.is_none() {
            if let Some(h) = &self.horizon {
                if t > h {
                    return Err(Error::BeyondHorizon {
                        t: t.to_f64(),
                        horizon: h.to_f64(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Epoch in force at `t` (post-event state at event times).
    pub fn epoch_at(&self, t: &T) -> Result<&Epoch<T>> {
        self.check_time(t)?;
        let idx = self.epochs.partition_point(|e| e.time <= *t);
        Ok(&self.epochs[idx.saturating_sub(1)])
    }

    pub fn clusters_at(&self, t: &T) -> Result<Vec<ClusterView<T>>> {
        Ok(self
            .epoch_at(t)?
            .clusters
            .iter()
            .map(|c| ClusterView {
                mass: c.mass.clone(),
                position: c.position_at(t),
                velocity: c.velocity(),
                members: c.members.clone(),
                absorbed: c.is_absorbed(),
                component: c.component,
                initial_momentum: c.initial_momentum.clone(),
            })
            .collect())
    }

    pub fn state_at(&self, t: &T) -> Result<ParticleState<T>> {
        ParticleState::new(
            self.clusters_at(t)?
                .into_iter()
                .map(|c| Atom::new(c.mass, c.position, c.velocity))
                .collect(),
        )
    }

    /// `X(t, yᵢ)` for every initial atom `i`.
    pub fn atom_positions_at(&self, t: &T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.initial.len()];
        for c in &self.epoch_at(t)?.clusters {
            let p = c.position_at(t);
            for &i in &c.members {
                out[i] = p.clone();
            }
        }
        Ok(out)
    }

    /// Velocity of the cluster carrying each initial atom at time `t`.
    pub fn atom_velocities_at(&self, t: &T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.initial.len()];
        for c in &self.epoch_at(t)?.clusters {
            let v = c.velocity();
            for &i in &c.members {
                out[i] = v.clone();
            }
        }
        Ok(out)
    }

    pub fn event_times(&self) -> Vec<T> {
        self.epochs.iter().skip(1).map(|e| e.time.clone()).collect()
    }

    pub fn final_clusters(&self) -> &[Cluster<T>] {
        &self.epochs.last().expect("initial epoch").clusters
    }

    /// Last event time, or zero when nothing ever happens.
    pub fn last_event_time(&self) -> T {
        self.epochs.last().expect("initial epoch").time.clone()
    }
}

#[derive(Debug, Clone)]
enum PendingKind<T> {
    Pair(usize, usize),
    Wall(usize, T),
}

#[derive(Debug, Clone)]
struct Pending<T> {
    time: T,
    seq: u64,
    kind: PendingKind<T>,
}

impl<T: Scalar> PartialEq for Pending<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Pending<T> {}
impl<T: Scalar> PartialOrd for Pending<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Pending<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Meeting time of the free clusters `left < right`, if they approach.
fn pair_meeting_time<T: Scalar>(left: &Cluster<T>, right: &Cluster<T>) -> Option<T> {
    if left.is_absorbed() || right.is_absorbed() || left.component != right.component {
        // absorbed clusters sit on a boundary; arrivals there are wall hits
        return None;
    }
    let closing = left.velocity() - right.velocity();
    if closing <= T::zero() {
        return None;
    }
    Some((right.anchor() - left.anchor()) / closing)
}

/// Time at which a free cluster reaches the boundary of its component.
fn wall_hit<T: Scalar>(c: &Cluster<T>, domain: &Domain<T>) -> Option<(T, T)> {
    if c.is_absorbed() {
        return None;
    }
    let comp = &domain.components()[c.component];
    let v = c.velocity();
    let target = if v < T::zero() {
        comp.lo.clone()?
    } else if v > T::zero() {
        comp.hi.clone()?
    } else {
        return None;
    };
    Some(((target.clone() - c.anchor()) / v, target))
}

fn within_batch<T: Scalar>(t: &T, batch_time: &T) -> bool {
    if T::EXACT {
        t == batch_time
    } else {
        t.to_f64() <= batch_time.to_f64() + FLOAT_TOL
    }
}

struct Slot<T> {
    cluster: Cluster<T>,
    alive: bool,
    prev: Option<usize>,
    next: Option<usize>,
}

struct Engine<'a, T: Scalar> {
    domain: &'a Domain<T>,
    slots: Vec<Slot<T>>,
    head: Option<usize>,
    heap: BinaryHeap<Reverse<Pending<T>>>,
    seq: u64,
}

impl<'a, T: Scalar> Engine<'a, T> {
    fn push(&mut self, time: T, kind: PendingKind<T>) {
        self.seq += 1;
        self.heap.push(Reverse(Pending {
            time,
            seq: self.seq,
            kind,
        }));
    }

    fn schedule(&mut self, id: usize, now: &T) {
        if let Some(next) = self.slots[id].next {
            if let Some(t) = pair_meeting_time(&self.slots[id].cluster, &self.slots[next].cluster) {
                self.push(t.max_of(now.clone()), PendingKind::Pair(id, next));
            }
        }
        if let Some(prev) = self.slots[id].prev {
            if let Some(t) = pair_meeting_time(&self.slots[prev].cluster, &self.slots[id].cluster) {
                self.push(t.max_of(now.clone()), PendingKind::Pair(prev, id));
            }
        }
        if let Some((t, wall)) = wall_hit(&self.slots[id].cluster, self.domain) {
            self.push(t.max_of(now.clone()), PendingKind::Wall(id, wall));
        }
    }

    fn is_valid(&self, p: &Pending<T>) -> bool {
        match &p.kind {
            PendingKind::Pair(l, r) => {
                self.slots[*l].alive && self.slots[*r].alive && self.slots[*l].next == Some(*r)
            }
            PendingKind::Wall(id, _) => self.slots[*id].alive && !self.slots[*id].cluster.is_absorbed(),
        }
    }

    fn peek_valid(&mut self) -> Option<&Pending<T>> {
        while let Some(Reverse(top)) = self.heap.peek() {
            if self.is_valid(top) {
                break;
            }
            self.heap.pop();
        }
        self.heap.peek().map(|Reverse(p)| p)
    }

    fn live_clusters(&self) -> Vec<Cluster<T>> {
        let mut out = Vec::new();
        let mut cur = self.head;
        while let Some(id) = cur {
            out.push(self.slots[id].cluster.clone());
            cur = self.slots[id].next;
        }
        out
    }

    /// Replaces the contiguous run `ids` (in order) by one merged cluster.
    fn replace_run(&mut self, ids: &[usize], wall: Option<T>) -> usize {
        let clusters: Vec<Cluster<T>> = ids.iter().map(|&i| self.slots[i].cluster.clone()).collect();
        let merged = merge(&clusters, wall);
        let first = ids[0];
        let last = *ids.last().expect("nonempty run");
        let prev = self.slots[first].prev;
        let next = self.slots[last].next;
        for &i in ids {
            self.slots[i].alive = false;
        }
        let new_id = self.slots.len();
        self.slots.push(Slot {
            cluster: merged,
            alive: true,
            prev,
            next,
        });
        match prev {
            Some(p) => self.slots[p].next = Some(new_id),
            None => self.head = Some(new_id),
        }
        if let Some(n) = next {
            self.slots[n].prev = Some(new_id);
        }
        new_id
    }

    /// Applies all contacts at `time`, including cascades created by the
    /// merges themselves, and returns one event per resulting cluster.
    fn process_batch(&mut self, time: &T) -> Vec<CollisionEvent<T>> {
        // participants (pre-batch snapshots) per slot touched in this batch
        let mut touched: BTreeMap<usize, (Vec<Cluster<T>>, bool)> = BTreeMap::new();
        loop {
            let mut contacts = Vec::new();
            while let Some(p) = self.peek_valid() {
                if !within_batch(&p.time, time) {
                    break;
                }
                let Reverse(p) = self.heap.pop().expect("peeked");
                contacts.push(p.kind);
            }
            if contacts.is_empty() {
                break;
            }
            // union adjacent pairs into runs; walls attach to the run
            let mut link_right: BTreeMap<usize, usize> = BTreeMap::new();
            let mut wall_of: BTreeMap<usize, T> = BTreeMap::new();
            for c in contacts {
                match c {
                    PendingKind::Pair(l, r) => {
                        link_right.insert(l, r);
                    }
                    PendingKind::Wall(id, w) => {
                        // an absorbed cluster already sitting on that wall joins the run
                        let neighbour = if self.slots[id]
                            .prev
                            .is_some_and(|p| self.slots[p].cluster.wall.as_ref() == Some(&w))
                        {
                            self.slots[id].prev.map(|p| (p, id))
                        } else if self.slots[id]
                            .next
                            .is_some_and(|n| self.slots[n].cluster.wall.as_ref() == Some(&w))
                        {
                            self.slots[id].next.map(|n| (id, n))
                        } else {
                            None
                        };
                        if let Some((l, r)) = neighbour {
                            link_right.insert(l, r);
                        }
                        wall_of.insert(id, w);
                    }
                }
            }
            let mut starts: Vec<usize> = Vec::new();
            let linked_from: std::collections::BTreeSet<usize> = link_right.values().copied().collect();
            let mut in_contact: std::collections::BTreeSet<usize> = link_right.keys().copied().collect();
            in_contact.extend(linked_from.iter().copied());
            in_contact.extend(wall_of.keys().copied());
            for &id in &in_contact {
                if !linked_from.contains(&id) {
                    starts.push(id);
                }
            }
            for start in starts {
                let mut run = vec![start];
                let mut cur = start;
                while let Some(&r) = link_right.get(&cur) {
                    run.push(r);
                    cur = r;
                }
                let wall = run.iter().find_map(|i| wall_of.get(i).cloned());
                let absorbing = wall.is_some();
                let mut participants = Vec::new();
                let mut absorbed_here = absorbing;
                for &i in &run {
                    match touched.remove(&i) {
                        Some((ps, a)) => {
                            participants.extend(ps);
                            absorbed_here |= a;
                        }
                        None => participants.push(self.slots[i].cluster.clone()),
                    }
                }
                let new_id = self.replace_run(&run, wall);
                touched.insert(new_id, (participants, absorbed_here));
                self.schedule(new_id, time);
            }
        }
        let mut events: Vec<CollisionEvent<T>> = touched
            .into_iter()
            .map(|(id, (participants, absorbed))| {
                let resulting = self.slots[id].cluster.clone();
                CollisionEvent {
                    time: time.clone(),
                    position: resulting.position_at(time),
                    participants,
                    kind: if absorbed {
                        EventKind::WallAbsorption
                    } else {
                        EventKind::InteriorMerge
                    },
                    resulting,
                }
            })
            .collect();
        events.sort_by(|a, b| a.position.total_cmp(&b.position));
        events
    }
}

/// Runs the sticky dynamics of `initial` on `domain` up to `horizon`
/// (or until no further event can occur).
pub fn simulate<T: Scalar>(
    initial: &ParticleState<T>,
    domain: &Domain<T>,
    horizon: Option<T>,
) -> Result<EventLog<T>> {
    let mut atom_components = Vec::with_capacity(initial.len());
    for (index, a) in initial.atoms().iter().enumerate() {
        match domain.component_of(&a.position) {
            Some(c) => atom_components.push(c),
            None => {
                return Err(Error::OutsideDomain {
                    index,
                    position: a.position.to_f64(),
                })
            }
        }
    }

    let mut engine = Engine {
        domain,
        slots: Vec::with_capacity(2 * initial.len()),
        head: None,
        heap: BinaryHeap::new(),
        seq: 0,
    };
    let mut events = Vec::new();
    let n = initial.len();
    for (i, a) in initial.atoms().iter().enumerate() {
        let mut cluster = Cluster::from_atom(i, a, atom_components[i]);
        let boundary = domain.components()[atom_components[i]].boundary_at(&a.position);
        if let Some(w) = boundary {
            let before = cluster.clone();
            cluster.wall = Some(w.clone());
            events.push(CollisionEvent {
                time: T::zero(),
                position: w,
                participants: vec![before],
                resulting: cluster.clone(),
                kind: EventKind::WallAbsorption,
            });
        }
        engine.slots.push(Slot {
            cluster,
            alive: true,
            prev: i.checked_sub(1),
            next: (i + 1 < n).then_some(i + 1),
        });
    }
    engine.head = (n > 0).then_some(0);
    let zero = T::zero();
    for i in 0..n {
        // pairs are pushed twice (once from each side); duplicates are harmless
        engine.schedule(i, &zero);
    }

    let mut epochs = vec![Epoch {
        time: T::zero(),
        clusters: engine.live_clusters(),
    }];
    // every event removes at least one free cluster
    let budget = n + 1;
    let mut batches = 0usize;
    let mut reached_end = false;
    loop {
        let next_time = match engine.peek_valid() {
            None => {
                reached_end = true;
                break;
            }
            Some(p) => p.time.clone(),
        };
        if horizon.as_ref().is_some_and(|h| next_time > *h) {
            break;
        }
        batches += 1;
        if batches > budget {
            return Err(Error::EventBudgetExhausted(budget));
        }
        let batch = engine.process_batch(&next_time);
        events.extend(batch);
        epochs.push(Epoch {
            time: next_time,
            clusters: engine.live_clusters(),
        });
    }
    let equilibrium_time = reached_end.then(|| epochs.last().expect("initial epoch").time.clone());
    Ok(EventLog {
        initial: initial.clone(),
        domain: domain.clone(),
        events,
        epochs,
        horizon,
        equilibrium_time,
        atom_components,
    })
}

/// Earliest future event among `clusters` (sorted by position) by direct
/// scan of adjacent pairs and boundary hits. Clusters meeting at the same
/// time and place are grouped; when several separate groups share the
/// earliest time the leftmost is returned.
pub fn next_event<T: Scalar>(
    clusters: &[Cluster<T>],
    domain: &Domain<T>,
    now: &T,
) -> Option<CollisionEvent<T>> {
    let mut candidates: Vec<(T, PendingKind<T>)> = Vec::new();
    for (i, c) in clusters.iter().enumerate() {
        if let Some(next) = clusters.get(i + 1) {
            if let Some(t) = pair_meeting_time(c, next) {
                candidates.push((t.max_of(now.clone()), PendingKind::Pair(i, i + 1)));
            }
        }
        if let Some((t, w)) = wall_hit(c, domain) {
            candidates.push((t.max_of(now.clone()), PendingKind::Wall(i, w)));
        }
    }
    let earliest = candidates
        .iter()
        .map(|(t, _)| t.clone())
        .min_by(|a, b| a.total_cmp(b))?;
    let mut link_right = BTreeMap::new();
    let mut wall_of = BTreeMap::new();
    for (t, kind) in candidates {
        if !within_batch(&t, &earliest) {
            continue;
        }
        match kind {
            PendingKind::Pair(l, r) => {
                link_right.insert(l, r);
            }
            PendingKind::Wall(i, w) => {
                if i > 0 && clusters[i - 1].wall.as_ref() == Some(&w) {
                    link_right.insert(i - 1, i);
                } else if clusters.get(i + 1).is_some_and(|n| n.wall.as_ref() == Some(&w)) {
                    link_right.insert(i, i + 1);
                }
                wall_of.insert(i, w);
            }
        }
    }
    let start = link_right
        .keys()
        .chain(wall_of.keys())
        .copied()
        .min()
        .expect("at least one contact");
    let mut run = vec![start];
    while let Some(&r) = link_right.get(run.last().expect("nonempty")) {
        run.push(r);
    }
    let participants: Vec<Cluster<T>> = run.iter().map(|&i| clusters[i].clone()).collect();
    let wall = run.iter().find_map(|i| wall_of.get(i).cloned());
    let kind = if wall.is_some() {
        EventKind::WallAbsorption
    } else {
        EventKind::InteriorMerge
    };
    let resulting = merge(&participants, wall);
    Some(CollisionEvent {
        position: resulting.position_at(&earliest),
        time: earliest,
        participants,
        resulting,
        kind,
    })
}
