//! Independent check of a timed program: every pulse and every bin
//! interaction is replayed on a stabilizer register and the final state is
//! compared with the tree's graph state, ignoring signs.

use serde::Serialize;

use super::timeline::{EventKind, Timeline};
use super::EmissionProgram;

/// Stabilizer generators without phases, one row of X bits then Z bits per
/// generator.
#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    n: usize,
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl StabilizerGroup {
    /// All qubits in a Z eigenstate.
    pub fn new(n: usize) -> Self {
        let words = (2 * n).div_ceil(64);
        let mut g = StabilizerGroup { n, words, rows: vec![vec![0; words]; n] };
        for q in 0..n {
            g.set(q, n + q);
        }
        g
    }

    fn set(&mut self, row: usize, bit: usize) {
        self.rows[row][bit / 64] |= 1 << (bit % 64);
    }

    fn get(row: &[u64], bit: usize) -> bool {
        row[bit / 64] >> (bit % 64) & 1 == 1
    }

    fn flip(row: &mut [u64], bit: usize) {
        row[bit / 64] ^= 1 << (bit % 64);
    }

    pub fn h(&mut self, q: usize) {
        let n = self.n;
        for r in &mut self.rows {
            let (x, z) = (Self::get(r, q), Self::get(r, n + q));
            if x != z {
                Self::flip(r, q);
                Self::flip(r, n + q);
            }
        }
    }

    pub fn cx(&mut self, c: usize, t: usize) {
        let n = self.n;
        for r in &mut self.rows {
            if Self::get(r, c) {
                Self::flip(r, t);
            }
            if Self::get(r, n + t) {
                Self::flip(r, n + c);
            }
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        let n = self.n;
        for r in &mut self.rows {
            let (xa, xb) = (Self::get(r, a), Self::get(r, b));
            if xb {
                Self::flip(r, n + a);
            }
            if xa {
                Self::flip(r, n + b);
            }
        }
    }

    fn echelon(&self) -> Vec<(usize, Vec<u64>)> {
        let mut rows = self.rows.clone();
        let mut out = Vec::new();
        for col in 0..2 * self.n {
            let Some(i) = rows.iter().position(|r| Self::get(r, col)) else { continue };
            let pivot = rows.swap_remove(i);
            for r in rows.iter_mut().filter(|r| Self::get(r, col)) {
                r.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
            out.push((col, pivot));
        }
        out
    }

    /// Whether the Pauli with the given X and Z supports is in the group up
    /// to sign.
    pub fn contains(&self, x: &[usize], z: &[usize]) -> bool {
        self.contains_all(&[(x.to_vec(), z.to_vec())])[0]
    }

    pub fn contains_all(&self, paulis: &[(Vec<usize>, Vec<usize>)]) -> Vec<bool> {
        let ech = self.echelon();
        paulis
            .iter()
            .map(|(x, z)| {
                let mut v = vec![0u64; self.words];
                x.iter().for_each(|&q| Self::flip(&mut v, q));
                z.iter().for_each(|&q| Self::flip(&mut v, self.n + q));
                for (col, row) in &ech {
                    if Self::get(&v, *col) {
                        v.iter_mut().zip(row).for_each(|(a, b)| *a ^= b);
                    }
                }
                v.iter().all(|&w| w == 0)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateCheck {
    pub ok: bool,
    pub reason: String,
}

/// Replays the timeline on a stabilizer register. Photons are qubits
/// `0..P`, emitters follow.
pub fn verify_state(p: &EmissionProgram, tl: &Timeline) -> StateCheck {
    let np = p.photons.len();
    let mut g = StabilizerGroup::new(np + p.emitters);
    let q = |j: usize| np + j;
    for e in &tl.events {
        match e.kind {
            EventKind::Prepare => g.h(q(e.emitter)),
            EventKind::EmitEarly => g.cx(q(e.emitter), e.photon.unwrap()),
            EventKind::EmitEnd => {
                let ph = e.photon.unwrap();
                if tl.emissions[ph].kind.resets() {
                    g.cx(ph, q(e.emitter));
                }
            }
            // Either bin is a CZ with the emitter up to a local Z.
            EventKind::Arrival => g.cz(e.photon.unwrap(), q(e.emitter)),
            EventKind::EmitLate => {}
        }
    }
    let tree = &p.explicit;
    if p.last_layer_rotated {
        let deepest = tree.depth();
        for v in (0..np).filter(|&v| tree.layer(v) == deepest) {
            g.h(v);
        }
    }
    let mut paulis = Vec::new();
    for j in 0..p.emitters {
        paulis.push((vec![], vec![q(j)]));
    }
    for v in 0..np {
        let mut z: Vec<usize> = tree.children(v).to_vec();
        z.extend(tree.parent(v));
        paulis.push((vec![v], z));
    }
    let hits = g.contains_all(&paulis);
    if let Some(j) = (0..p.emitters).find(|&j| !hits[j]) {
        return StateCheck { ok: false, reason: format!("emitter {j} is still entangled") };
    }
    if let Some(v) = (0..np).find(|&v| !hits[p.emitters + v]) {
        return StateCheck { ok: false, reason: format!("stabilizer of vertex {v} is missing") };
    }
    StateCheck { ok: true, reason: "state equals the tree graph state up to local Z".into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_pair_stabilizers() {
        let mut g = StabilizerGroup::new(2);
        g.h(0);
        g.h(1);
        g.cz(0, 1);
        g.h(1);
        // CZ on |+>|+> then H on qubit 1 gives a Bell pair: XX and ZZ.
        assert!(g.contains(&[0, 1], &[]));
        assert!(g.contains(&[], &[0, 1]));
        assert!(!g.contains(&[0], &[]));
    }

    #[test]
    fn copy_then_rotate_gives_graph_edge() {
        // Emitter 1 prepared, photon 0 copied out, emitter rotated back:
        // the pair is a two-vertex graph state.
        let mut g = StabilizerGroup::new(2);
        g.h(1);
        g.cx(1, 0);
        g.h(1);
        assert!(g.contains(&[0], &[1]));
        assert!(g.contains(&[1], &[0]));
    }
}
