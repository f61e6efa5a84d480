//! Uniform spatial bins for neighbour queries.

pub(crate) struct Bins {
    size: f64,
    dims: [usize; 3],
    cells: Vec<Vec<usize>>,
}

impl Bins {
    pub(crate) fn new(extents: [f64; 3], size: f64) -> Self {
        let dims = extents.map(|e| ((e / size).ceil() as usize).max(1));
        Bins {
            size,
            dims,
            cells: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
        }
    }

    fn coord(&self, p: [f64; 3]) -> [usize; 3] {
        let mut c = [0; 3];
        for a in 0..3 {
            c[a] = ((p[a] / self.size).floor().max(0.0) as usize).min(self.dims[a] - 1);
        }
        c
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    pub(crate) fn insert(&mut self, idx: usize, p: [f64; 3]) {
        let f = self.flat(self.coord(p));
        self.cells[f].push(idx);
    }

    pub(crate) fn remove(&mut self, idx: usize, p: [f64; 3]) {
        let f = self.flat(self.coord(p));
        let cell = &mut self.cells[f];
        if let Some(pos) = cell.iter().position(|&i| i == idx) {
            cell.swap_remove(pos);
        }
    }

    /// Calls `f` for every entry in the 27 bins around `p`.
    pub(crate) fn for_each_near(&self, p: [f64; 3], mut f: impl FnMut(usize)) {
        let c = self.coord(p);
        let lo = c.map(|v| v.saturating_sub(1));
        let hi = [0, 1, 2].map(|a| (c[a] + 1).min(self.dims[a] - 1));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    for &i in &self.cells[self.flat([x, y, z])] {
                        f(i);
                    }
                }
            }
        }
    }
}
