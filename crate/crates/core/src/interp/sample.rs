//! Deterministic input sampling: an exhaustive pass over tiny inputs, then
//! seeded random draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Bindings;
use crate::expr::Name;
use crate::frontend::{Decl, ShapeSpec, Type};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Number of random draws after the exhaustive set.
    pub budget: usize,
    /// Longest dimension in the exhaustive set.
    pub max_len: usize,
    /// Most sequence cells (summed over inputs) in the exhaustive set.
    pub max_cells: usize,
    pub small_lo: i64,
    pub small_hi: i64,
    /// Random draws: outer length in `0..=outer_max`, inner in `0..=inner_max`.
    pub outer_max: usize,
    pub inner_max: usize,
    pub val_max: i64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 42,
            budget: 1000,
            max_len: 3,
            max_cells: 3,
            small_lo: -2,
            small_hi: 2,
            outer_max: 8,
            inner_max: 4,
            val_max: 8,
        }
    }
}

/// A value-semantics sample stream for one input signature.
#[derive(Clone, Debug)]
pub struct Sampler {
    /// Distinct bound variables and, per depth, the index into `bounds`.
    bounds: Vec<Name>,
    depth_bound: Vec<usize>,
    seqs: Vec<(Name, Type, Vec<usize>)>,
    scalars: Vec<(Name, Type)>,
    pub cfg: SamplerConfig,
}

impl Sampler {
    pub fn new(shape: &ShapeSpec, inputs: &[Decl], cfg: SamplerConfig) -> Sampler {
        let mut bounds: Vec<Name> = Vec::new();
        let mut depth_bound = Vec::new();
        for d in &shape.dims {
            let k = bounds.iter().position(|b| b == d).unwrap_or_else(|| {
                bounds.push(d.clone());
                bounds.len() - 1
            });
            depth_bound.push(k);
        }
        let seqs = shape
            .seqs
            .iter()
            .map(|s| (s.name.clone(), s.elem.clone(), s.depths.iter().map(|&d| depth_bound[d]).collect()))
            .collect();
        let scalars = inputs
            .iter()
            .filter(|d| !d.ty.is_seq() && !bounds.contains(&d.name))
            .map(|d| (d.name.clone(), d.ty.clone()))
            .collect();
        Sampler { bounds, depth_bound, seqs, scalars, cfg }
    }

    /// An independent stream (for a worker or a sub-check) derived from this one.
    pub fn fork(&self, k: u64) -> Sampler {
        let mut s = self.clone();
        s.cfg.seed = self.cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k.wrapping_add(1));
        s
    }

    pub fn with_config(&self, cfg: SamplerConfig) -> Sampler {
        Sampler { cfg, ..self.clone() }
    }

    fn cells(&self, lens: &[usize]) -> usize {
        self.seqs.iter().map(|(_, _, dims)| dims.iter().map(|&d| lens[d]).product::<usize>()).sum()
    }

    /// Every input whose dimensions are at most `max_len` and whose total cell
    /// count is at most `max_cells`, smallest first.
    pub fn exhaustive(&self) -> Vec<Bindings> {
        let nb = self.bounds.len();
        let mut shapes: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..nb {
            shapes = shapes
                .into_iter()
                .flat_map(|s| {
                    (0..=self.cfg.max_len).map(move |l| {
                        let mut t = s.clone();
                        t.push(l);
                        t
                    })
                })
                .collect();
        }
        shapes.retain(|s| self.cells(s) <= self.cfg.max_cells);
        shapes.sort_by_key(|s| (self.cells(s), s.iter().sum::<usize>(), s.clone()));
        let ints: Vec<Value> = (self.cfg.small_lo..=self.cfg.small_hi).map(Value::int).collect();
        let bools = vec![Value::Bool(false), Value::Bool(true)];
        let domain = |t: &Type| if *t == Type::Bool { &bools } else { &ints };
        let mut out = Vec::new();
        for lens in shapes {
            // one mixed-radix digit per cell, then per scalar input
            let mut radices = Vec::new();
            for (_, elem, dims) in &self.seqs {
                let n: usize = dims.iter().map(|&d| lens[d]).product();
                radices.extend(std::iter::repeat_n(domain(elem).len(), n));
            }
            for (_, t) in &self.scalars {
                radices.push(domain(t).len());
            }
            let mut digits = vec![0usize; radices.len()];
            loop {
                let mut cursor = 0;
                let mut b = Bindings::new();
                for (k, n) in self.bounds.iter().enumerate() {
                    b.insert(n.clone(), Value::int(lens[k] as i64));
                }
                for (name, elem, dims) in &self.seqs {
                    let dom = domain(elem);
                    let shape: Vec<usize> = dims.iter().map(|&d| lens[d]).collect();
                    let v = build(&shape, &mut || {
                        let v = dom[digits[cursor]].clone();
                        cursor += 1;
                        v
                    });
                    b.insert(name.clone(), v);
                }
                for (name, t) in &self.scalars {
                    b.insert(name.clone(), domain(t)[digits[cursor]].clone());
                    cursor += 1;
                }
                out.push(b);
                // increment
                let mut k = 0;
                while k < digits.len() {
                    digits[k] += 1;
                    if digits[k] < radices[k] {
                        break;
                    }
                    digits[k] = 0;
                    k += 1;
                }
                if k == digits.len() {
                    break;
                }
            }
        }
        out
    }

    /// `count` seeded random inputs.
    pub fn random(&self, count: usize) -> Vec<Bindings> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Bindings {
        let lens: Vec<usize> = (0..self.bounds.len())
            .map(|k| {
                let outer = self.depth_bound.first() == Some(&k);
                rng.gen_range(0..=if outer { self.cfg.outer_max } else { self.cfg.inner_max })
            })
            .collect();
        let mut b = Bindings::new();
        for (k, n) in self.bounds.iter().enumerate() {
            b.insert(n.clone(), Value::int(lens[k] as i64));
        }
        let vm = self.cfg.val_max;
        for (name, elem, dims) in &self.seqs {
            let shape: Vec<usize> = dims.iter().map(|&d| lens[d]).collect();
            let v = build(&shape, &mut || random_scalar(rng, elem, vm));
            b.insert(name.clone(), v);
        }
        for (name, t) in &self.scalars {
            b.insert(name.clone(), random_scalar(rng, t, vm));
        }
        b
    }

    /// Exhaustive set followed by `budget` random draws.
    pub fn stream(&self) -> impl Iterator<Item = Bindings> {
        self.exhaustive().into_iter().chain(self.random(self.cfg.budget))
    }

    /// Random draws with a fixed outer length.
    pub fn random_with_rows(&self, count: usize, rows: usize) -> Vec<Bindings> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ (rows as u64) << 32);
        let outer = self.depth_bound.first().copied();
        (0..count)
            .map(|_| {
                let mut b = self.draw(&mut rng);
                if let Some(k) = outer {
                    let name = self.bounds[k].clone();
                    let old = super::outer_len_of(&b, &name);
                    if old != rows {
                        b = self.resize_outer(&b, rows, &mut rng);
                    }
                }
                b
            })
            .collect()
    }

    fn resize_outer(&self, b: &Bindings, rows: usize, rng: &mut ChaCha8Rng) -> Bindings {
        let ok = self.depth_bound[0];
        let lens: Vec<usize> = (0..self.bounds.len())
            .map(|k| if k == ok { rows } else { b[&self.bounds[k]].as_int().unwrap().to_i64().unwrap() as usize })
            .collect();
        let mut out = b.clone();
        out.insert(self.bounds[ok].clone(), Value::int(rows as i64));
        for (name, elem, dims) in &self.seqs {
            if dims.contains(&ok) {
                let shape: Vec<usize> = dims.iter().map(|&d| lens[d]).collect();
                let v = build(&shape, &mut || random_scalar(rng, elem, self.cfg.val_max));
                out.insert(name.clone(), v);
            }
        }
        out
    }
}

fn random_scalar(rng: &mut ChaCha8Rng, t: &Type, vm: i64) -> Value {
    if *t == Type::Bool {
        Value::Bool(rng.gen())
    } else {
        Value::int(rng.gen_range(-vm..=vm))
    }
}

fn build(shape: &[usize], leaf: &mut dyn FnMut() -> Value) -> Value {
    match shape.split_first() {
        None => leaf(),
        Some((&n, rest)) => Value::seq((0..n).map(|_| build(rest, leaf)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::LoopNest;

    fn sampler(src: &str, cfg: SamplerConfig) -> Sampler {
        let n = LoopNest::from_source(src).unwrap();
        Sampler::new(&n.shape, &n.inputs, cfg)
    }

    const ONE_D: &str = "input n: int; input a: seq<int>; state s: int = 0; for i in 0..n { s := s + a[i]; }";

    #[test]
    fn tiny_one_dimensional_count() {
        let cfg =
            SamplerConfig { max_len: 1, max_cells: 1, small_lo: -1, small_hi: 1, budget: 0, ..Default::default() };
        assert_eq!(sampler(ONE_D, cfg).stream().count(), 4);
    }

    #[test]
    fn default_exhaustive_counts_all_short_lists() {
        let s = sampler(ONE_D, SamplerConfig::default());
        assert_eq!(s.exhaustive().len(), 1 + 5 + 25 + 125);
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<_> = sampler(ONE_D, SamplerConfig::default()).stream().collect();
        let b: Vec<_> = sampler(ONE_D, SamplerConfig::default()).stream().collect();
        assert_eq!(a, b);
        let c = sampler(ONE_D, SamplerConfig::default()).fork(1).random(50);
        assert_ne!(a[a.len() - 50..].to_vec(), c);
    }

    #[test]
    fn grid_shapes_are_rectangular() {
        let src = "input n: int; input m: int; input A: seq<seq<int>>; state s: int = 0;
            for i in 0..n { for j in 0..m { s := s + A[i][j]; } }";
        for b in sampler(src, SamplerConfig::default()).random(100) {
            let m = b["m"].as_int().unwrap().to_i64().unwrap() as usize;
            let rows = b["A"].as_seq().unwrap();
            assert_eq!(rows.len() as i64, b["n"].as_int().unwrap().to_i64().unwrap());
            assert!(rows.iter().all(|r| r.as_seq().unwrap().len() == m));
        }
    }
}
