//! Finite domains for the propagation engine.
//!
//! Each train has `q` slots; slot (i, j) carries a trip variable and a
//! maintenance variable. A trip domain is a set of trip ids plus an optional
//! "no trip" sentinel (the sentinel value is unique per slot, so equality of
//! two assigned slots can only happen on real trips). A maintenance domain is
//! a set of type ids plus the "no maintenance" value.

use crate::model::TripId;

/// Bitset over trip ids.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TripSet {
    words: Vec<u64>,
    n: usize,
}

impl TripSet {
    pub fn empty(n: usize) -> Self {
        TripSet { words: vec![0; n.div_ceil(64)], n }
    }

    pub fn full(n: usize) -> Self {
        let mut s = TripSet::empty(n);
        for k in 0..n {
            s.insert(k);
        }
        s
    }

    pub fn insert(&mut self, k: TripId) {
        debug_assert!(k < self.n);
        self.words[k / 64] |= 1 << (k % 64);
    }

    pub fn remove(&mut self, k: TripId) -> bool {
        let w = &mut self.words[k / 64];
        let bit = 1u64 << (k % 64);
        let had = *w & bit != 0;
        *w &= !bit;
        had
    }

    pub fn contains(&self, k: TripId) -> bool {
        k < self.n && self.words[k / 64] & (1 << (k % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    /// keeps only elements also in `other`; reports whether anything changed
    pub fn intersect_with(&mut self, other: &TripSet) -> bool {
        let mut changed = false;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            let next = *a & b;
            changed |= next != *a;
            *a = next;
        }
        changed
    }

    pub fn union_with(&mut self, other: &TripSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersects(&self, other: &TripSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// true when the intersection contains an element other than `except`
    pub fn intersects_besides(&self, other: &TripSet, except: TripId) -> bool {
        for (idx, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let mut w = a & b;
            if except / 64 == idx {
                w &= !(1u64 << (except % 64));
            }
            if w != 0 {
                return true;
            }
        }
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = TripId> + '_ {
        self.words.iter().enumerate().flat_map(|(idx, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(idx * 64 + bit)
                }
            })
        })
    }

    pub fn single(&self) -> Option<TripId> {
        if self.len() == 1 {
            self.iter().next()
        } else {
            None
        }
    }
}

/// Domain of one trip variable: trip candidates plus the slot's sentinel.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TripDomain {
    pub trips: TripSet,
    pub sentinel: bool,
}

impl TripDomain {
    pub fn full(n: usize) -> Self {
        TripDomain { trips: TripSet::full(n), sentinel: true }
    }

    pub fn is_wiped(&self) -> bool {
        !self.sentinel && self.trips.is_empty()
    }

    /// determined to run exactly this trip
    pub fn fixed_trip(&self) -> Option<TripId> {
        if self.sentinel {
            None
        } else {
            self.trips.single()
        }
    }

    pub fn is_fixed(&self) -> bool {
        (self.sentinel && self.trips.is_empty()) || (!self.sentinel && self.trips.len() == 1)
    }
}

/// Domain of one maintenance variable: a type-id bitmask plus "none".
/// Supports up to 64 maintenance types.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct MaintDomain {
    pub types: u64,
    pub none: bool,
}

impl MaintDomain {
    pub fn full(p: usize) -> Self {
        assert!(p <= 64, "at most 64 maintenance types supported");
        MaintDomain { types: if p == 64 { !0 } else { (1u64 << p) - 1 }, none: true }
    }

    pub fn contains(&self, u: usize) -> bool {
        self.types & (1 << u) != 0
    }

    pub fn remove(&mut self, u: usize) -> bool {
        let had = self.contains(u);
        self.types &= !(1u64 << u);
        had
    }

    pub fn is_wiped(&self) -> bool {
        !self.none && self.types == 0
    }

    /// determined to perform exactly this maintenance type
    pub fn fixed_type(&self) -> Option<usize> {
        if !self.none && self.types.count_ones() == 1 {
            Some(self.types.trailing_zeros() as usize)
        } else {
            None
        }
    }

    pub fn is_fixed(&self) -> bool {
        (self.none && self.types == 0) || (!self.none && self.types.count_ones() == 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let mut w = self.types;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let u = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(u)
            }
        })
    }
}

/// All variable domains of one search state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SlotPlan {
    pub num_trains: usize,
    pub num_trips: usize,
    pub num_types: usize,
    pub q: usize,
    trips: Vec<TripDomain>,
    maints: Vec<MaintDomain>,
}

impl SlotPlan {
    pub fn full(num_trains: usize, num_trips: usize, num_types: usize, q: usize) -> Self {
        SlotPlan {
            num_trains,
            num_trips,
            num_types,
            q,
            trips: vec![TripDomain::full(num_trips); num_trains * q],
            maints: vec![MaintDomain::full(num_types); num_trains * q],
        }
    }

    #[inline]
    fn idx(&self, train: usize, slot: usize) -> usize {
        debug_assert!(train < self.num_trains && slot < self.q);
        train * self.q + slot
    }

    pub fn trip(&self, train: usize, slot: usize) -> &TripDomain {
        &self.trips[self.idx(train, slot)]
    }

    pub fn trip_mut(&mut self, train: usize, slot: usize) -> &mut TripDomain {
        let i = self.idx(train, slot);
        &mut self.trips[i]
    }

    pub fn maint(&self, train: usize, slot: usize) -> &MaintDomain {
        &self.maints[self.idx(train, slot)]
    }

    pub fn maint_mut(&mut self, train: usize, slot: usize) -> &mut MaintDomain {
        let i = self.idx(train, slot);
        &mut self.maints[i]
    }

    /// the unique "no trip" value of a slot, used anywhere domains are shown
    pub fn sentinel_value(&self, train: usize, slot: usize) -> i64 {
        -((train * self.q + slot) as i64 + 1)
    }

    pub fn all_fixed(&self) -> bool {
        self.trips.iter().all(TripDomain::is_fixed) && self.maints.iter().all(MaintDomain::is_fixed)
    }
}
