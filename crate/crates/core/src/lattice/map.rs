use super::LatticeKey;

const EMPTY: u32 = u32::MAX;

fn mix_hash(leading: &[i32]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &k in leading {
        h = (h ^ k as u32 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        h ^= h >> 29;
    }
    h
}

/// Dense indexing of lattice points.
///
/// Open addressing over the first `d` key coordinates; the last coordinate
/// is implied by the zero sum. Slots are resolved by full key comparison.
#[derive(Clone, Debug)]
pub struct LatticeMap {
    d: usize,
    keys: Vec<i32>,
    slots: Vec<u32>,
    hasher: fn(&[i32]) -> u64,
}

impl LatticeMap {
    pub fn new(d: usize) -> Self {
        Self::with_capacity(d, 16)
    }

    pub fn with_capacity(d: usize, capacity: usize) -> Self {
        Self::with_hasher(d, capacity, mix_hash)
    }

    pub(crate) fn with_hasher(d: usize, capacity: usize, hasher: fn(&[i32]) -> u64) -> Self {
        let slots = (capacity.max(8) * 2).next_power_of_two();
        Self {
            d,
            keys: Vec::with_capacity(capacity * d),
            slots: vec![EMPTY; slots],
            hasher,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.keys.len() / self.d
        }
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn insert(&mut self, key: &LatticeKey) -> usize {
        assert_eq!(key.dim(), self.d, "lattice key dimension");
        self.insert_coords(key.coords())
    }

    pub fn lookup(&self, key: &LatticeKey) -> Option<usize> {
        if key.dim() != self.d {
            return None;
        }
        self.lookup_coords(key.coords())
    }

    /// Key of node `index`.
    pub fn key(&self, index: usize) -> LatticeKey {
        let leading = &self.keys[index * self.d..(index + 1) * self.d];
        let last = -leading.iter().sum::<i32>();
        let mut coords = leading.to_vec();
        coords.push(last);
        LatticeKey::from_raw(coords)
    }

    pub(crate) fn leading(&self, index: usize) -> &[i32] {
        &self.keys[index * self.d..(index + 1) * self.d]
    }

    /// Inserts by raw coordinates; only the first `d` are read.
    pub(crate) fn insert_coords(&mut self, coords: &[i32]) -> usize {
        let leading = &coords[..self.d];
        if (self.len() + 1) * 2 > self.slots.len() {
            self.grow();
        }
        let slot = self.probe(leading);
        match self.slots[slot] {
            EMPTY => {
                let index = self.len();
                self.slots[slot] = index as u32;
                self.keys.extend_from_slice(leading);
                index
            }
            index => index as usize,
        }
    }

    pub(crate) fn lookup_coords(&self, coords: &[i32]) -> Option<usize> {
        match self.slots[self.probe(&coords[..self.d])] {
            EMPTY => None,
            index => Some(index as usize),
        }
    }

    fn probe(&self, leading: &[i32]) -> usize {
        let mask = self.slots.len() - 1;
        let mut slot = (self.hasher)(leading) as usize & mask;
        loop {
            match self.slots[slot] {
                EMPTY => return slot,
                index if self.leading(index as usize) == leading => return slot,
                _ => slot = (slot + 1) & mask,
            }
        }
    }

    fn grow(&mut self) {
        let size = self.slots.len() * 2;
        self.slots = vec![EMPTY; size];
        let mask = size - 1;
        for index in 0..self.len() {
            let mut slot = (self.hasher)(self.leading(index)) as usize & mask;
            while self.slots[slot] != EMPTY {
                slot = (slot + 1) & mask;
            }
            self.slots[slot] = index as u32;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn key(c: &[i32]) -> LatticeKey {
        LatticeKey::new(c.to_vec()).unwrap()
    }

    fn random_key(rng: &mut Rng, d: usize) -> LatticeKey {
        let n = d as i32 + 1;
        let r = rng.below(d + 1) as i32;
        // The implied last coordinate has residue -d r = r (mod d+1).
        let leading: Vec<i32> = (0..d)
            .map(|_| (rng.below(2001) as i32 - 1000) * n + r)
            .collect();
        LatticeKey::from_leading(&leading).unwrap()
    }

    #[test]
    fn idempotent_insert() {
        let mut m = LatticeMap::new(2);
        let a = m.insert(&key(&[1, 1, -2]));
        let b = m.insert(&key(&[1, 1, -2]));
        assert_eq!(a, b);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn sequential_indices() {
        let mut m = LatticeMap::new(2);
        assert_eq!(m.insert(&key(&[0, 0, 0])), 0);
        assert_eq!(m.insert(&key(&[1, 1, -2])), 1);
        assert_eq!(m.key(1), key(&[1, 1, -2]));
    }

    #[test]
    fn absent_keys() {
        let mut m = LatticeMap::new(3);
        let k = key(&[4, -4, 0, 0]);
        m.insert(&k);
        assert_eq!(m.lookup(&k), Some(0));
        // Shift by (d+1) u_0 = (12, -4, -4, -4).
        let adjacent = key(&[16, -8, -4, -4]);
        assert_eq!(m.lookup(&adjacent), None);
        assert_eq!(m.lookup(&key(&[0, 0, 0, 0])), None);
    }

    #[test]
    fn replay_insertion_log() {
        let mut rng = Rng::new(11);
        let mut m = LatticeMap::new(3);
        let mut log = Vec::new();
        while log.len() < 1000 {
            let k = random_key(&mut rng, 3);
            if m.lookup(&k).is_none() {
                assert_eq!(m.insert(&k), log.len());
                log.push(k);
            }
        }
        assert_eq!(m.len(), 1000);
        for (i, k) in log.iter().enumerate() {
            assert_eq!(m.lookup(k), Some(i));
            assert_eq!(&m.key(i), k);
        }
    }

    #[test]
    fn correctness_does_not_depend_on_hash() {
        let mut rng = Rng::new(5);
        let mut m = LatticeMap::with_hasher(2, 4, |_| 42);
        let keys: Vec<LatticeKey> = (0..300).map(|_| random_key(&mut rng, 2)).collect();
        let mut reference: Vec<LatticeKey> = Vec::new();
        for k in &keys {
            let idx = m.insert(k);
            match reference.iter().position(|r| r == k) {
                Some(p) => assert_eq!(idx, p),
                None => {
                    assert_eq!(idx, reference.len());
                    reference.push(k.clone());
                }
            }
        }
        for (i, k) in reference.iter().enumerate() {
            assert_eq!(m.lookup(k), Some(i));
        }
    }
}
